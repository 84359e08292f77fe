import { describe, expect, it } from "vitest";
import type { Action } from "../src/session";
import { canSubmit, createSession, currentImage, reduce, replay } from "../src/session";
import { holeCount, masksEqual } from "../src/mask";
import type { Gallery, ImageRef } from "../src/types";

const base: ImageRef = { width: 64, height: 64, png: "base" };

function galleryOf(seeds: number[]): Gallery {
  return {
    variants: seeds.map((seed) => ({
      image: { width: 64, height: 64, png: `variant-${seed}` },
      segmentation: "seg",
      seed,
    })),
    failed: [],
  };
}

describe("EditorSession reducer", () => {
  it("starts with the base image at the bottom of the undo stack", () => {
    const session = createSession(base);
    expect(session.undoStack).toEqual([base]);
    expect(session.mask.width).toBe(64);
    expect(canSubmit(session)).toBe(false); // empty mask disables submit
  });

  it("mask layer always matches the current image dimensions", () => {
    let session = createSession(base);
    session = reduce(session, { type: "gallery-received", gallery: galleryOf([7]) });
    session = reduce(session, { type: "accept-variant", index: 0 });
    expect(session.mask.width).toBe(currentImage(session).width);
    expect(session.mask.height).toBe(currentImage(session).height);
  });

  it("accept variant pushes it onto the stack; undo restores the prior image exactly", () => {
    let session = createSession(base);
    session = reduce(session, { type: "gallery-received", gallery: galleryOf([3]) });
    session = reduce(session, { type: "accept-variant", index: 0 });
    expect(currentImage(session).png).toBe("variant-3");
    expect(session.undoStack).toHaveLength(2);
    session = reduce(session, { type: "undo" });
    expect(currentImage(session)).toEqual(base);
  });

  it("undo on the base image is a no-op (stack never empties)", () => {
    const session = reduce(createSession(base), { type: "undo" });
    expect(session.undoStack).toEqual([base]);
  });

  it("place mode requires a class before submit enables", () => {
    let session = createSession(base);
    session = reduce(session, { type: "draw-rect", x: 0, y: 0, w: 8, h: 8 });
    expect(canSubmit(session)).toBe(true);
    session = reduce(session, { type: "set-mode", mode: "place" });
    expect(canSubmit(session)).toBe(false);
    session = reduce(session, { type: "set-class", classLabel: "car" });
    expect(canSubmit(session)).toBe(true);
  });

  it("server failure sets the banner and leaves everything else unchanged", () => {
    let session = createSession(base);
    session = reduce(session, { type: "draw-rect", x: 2, y: 2, w: 10, h: 10 });
    const failed = reduce(session, { type: "gallery-failed", message: "server unreachable" });
    expect(failed.serverError).toBe("server unreachable");
    expect(failed.undoStack).toEqual(session.undoStack);
    expect(masksEqual(failed.mask, session.mask)).toBe(true);
    expect(failed.gallery).toBe(session.gallery);
  });

  it("transitions are pure: inputs are never mutated", () => {
    const session = createSession(base);
    reduce(session, { type: "draw-rect", x: 0, y: 0, w: 8, h: 8 });
    reduce(session, { type: "set-mode", mode: "place" });
    expect(holeCount(session.mask)).toBe(0);
    expect(session.mode).toBe("restore");
  });

  it("replaying a recorded action log reproduces the final session", () => {
    const log: Action[] = [
      { type: "set-tool", tool: "brush" },
      { type: "set-brush-radius", radius: 4 },
      { type: "brush-stroke", points: [[10, 10], [30, 30]] },
      { type: "set-mode", mode: "place" },
      { type: "set-class", classLabel: "pedestrian" },
      { type: "gallery-received", gallery: galleryOf([0, 1, 2]) },
      { type: "accept-variant", index: 1 },
      { type: "draw-rect", x: 5, y: 5, w: 12, h: 12 },
      { type: "undo" },
    ];
    const a = replay(base, log);
    const b = replay(base, log);
    expect(a).toEqual(b);
    expect(currentImage(a)).toEqual(base);
  });
});
