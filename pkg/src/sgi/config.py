"""Flat ``key = value`` config files and dataset profiles.

The config format is deliberately simple: one ``key = value`` pair per line,
``#`` starts a comment. Values are parsed as int, float, bool or str in that
order. Profiles bundle the dataset-specific defaults (class counts,
aggregation tables, epoch budgets).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


def parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def read_config(path) -> dict:
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, raw = line.partition("=")
        values[key.strip()] = parse_value(raw)
    return values


def write_config(values: dict, path) -> None:
    lines = [f"{k} = {values[k]}" for k in sorted(values)]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class Profile:
    name: str
    num_classes: int
    aggregation_table: str  # shipped table filename, "" = identity
    epochs: int
    car_class: int
    pedestrian_class: int
    resize_height: int = 256
    resize_width: int = 0  # 0 = keep aspect ratio
    exclude_720p: bool = False


PROFILES = {
    "cityscapes": Profile("cityscapes", num_classes=17, aggregation_table="cityscapes_17.txt",
                          epochs=600, car_class=14, pedestrian_class=12),
    # 1080p frames resized to a fixed 512x288, 720p frames dropped
    "idd": Profile("idd", num_classes=21, aggregation_table="idd_21.txt", epochs=200,
                   car_class=6, pedestrian_class=2,
                   resize_height=288, resize_width=512, exclude_720p=True),
    "fixture": Profile("fixture", num_classes=8, aggregation_table="", epochs=1,
                       car_class=6, pedestrian_class=5),
}


def get_profile(name: str) -> Profile:
    if name not in PROFILES:
        raise KeyError(f"unknown profile: {name!r} (choose from {sorted(PROFILES)})")
    return PROFILES[name]


# Default loss weights (generator objective) and shape-branch weights.
DEFAULT_LOSS_WEIGHTS = {
    "rec": 10.0,
    "perc": 10.0,
    "style": 250.0,
    "fm": 10.0,
    "cross": 10.0,  # multi-scale segmentation term
    "vae": 5.0,
    "inst_rec": 20.0,
    "shape_adv": 1.0,
}


@dataclass
class TrainSettings:
    """Everything the training loop needs beyond the dataset itself."""

    batch_size: int = 4
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    steps: int = 0            # 0 = derive from epochs
    epochs: int = 600
    seed: int = 0
    device: str = "cpu"
    checkpoint_every: int = 1000
    log_every: int = 10
    pretrain_shape_steps: int = 0
    lr_decay_start: int = 0   # 0 = constant lr; else linear decay to 0 after this step
    # probability of zeroing the placed instance channel fed to the generator,
    # so it also learns to reconstruct covered instances without the hint
    # (restore-mode inference always runs with a zero channel)
    instance_channel_dropout: float = 0.0
    width_mult: float = 1.0   # scales generator/discriminator channel widths
    disc_scales: int = 2
    latent_dim: int = 64
    loss_weights: dict = field(default_factory=lambda: dict(DEFAULT_LOSS_WEIGHTS))

    @classmethod
    def from_mapping(cls, values: dict) -> "TrainSettings":
        settings = cls()
        for key, val in values.items():
            if key.startswith("lambda_"):
                settings.loss_weights[key[len("lambda_"):]] = float(val)
            elif hasattr(settings, key):
                setattr(settings, key, val)
        return settings

    def to_mapping(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "loss_weights"}
        out.update({f"lambda_{k}": v for k, v in self.loss_weights.items()})
        return out
