import { Editor } from "./editor";
import { health } from "./api";
import type { ClassLabel, ImageRef, Mode, Tool } from "./types";

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

async function loadImageRef(file: File): Promise<ImageRef> {
  const bytes = new Uint8Array(await file.arrayBuffer());
  let bin = "";
  for (const b of bytes) bin += String.fromCharCode(b);
  const png = btoa(bin);
  const probe = new Image();
  await new Promise<void>((resolve, reject) => {
    probe.onload = () => resolve();
    probe.onerror = () => reject(new Error("not a decodable image"));
    probe.src = `data:image/png;base64,${png}`;
  });
  return { width: probe.naturalWidth, height: probe.naturalHeight, png };
}

function renderGallery(editor: Editor): void {
  const gallery = el<HTMLDivElement>("gallery");
  gallery.replaceChildren();
  const state = editor.state;
  if (state.serverError) {
    const banner = document.createElement("div");
    banner.className = "banner";
    banner.textContent = `server error: ${state.serverError}`;
    gallery.append(banner);
    return;
  }
  state.gallery?.variants.forEach((variant, i) => {
    const card = document.createElement("figure");
    const img = document.createElement("img");
    img.src = `data:image/png;base64,${variant.image.png}`;
    const caption = document.createElement("figcaption");
    caption.textContent = `seed ${variant.seed}`;
    const pick = document.createElement("button");
    pick.textContent = "accept";
    pick.onclick = () => editor.dispatch({ type: "accept-variant", index: i });
    card.append(img, caption, pick);
    gallery.append(card);
  });
}

async function boot(): Promise<void> {
  const healthy = await health();
  el<HTMLSpanElement>("health").textContent = healthy ? "connected" : "offline";

  el<HTMLInputElement>("file").onchange = async (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (!file) return;
    const base = await loadImageRef(file);
    const editor = new Editor(
      el<HTMLCanvasElement>("canvas"),
      el<HTMLCanvasElement>("mask-layer"),
      base,
      (_session, submitOk) => {
        el<HTMLButtonElement>("submit").disabled = submitOk === false;
        renderGallery(editor);
      },
    );
    el<HTMLSelectElement>("tool").onchange = (ev) =>
      editor.dispatch({ type: "set-tool", tool: (ev.target as HTMLSelectElement).value as Tool });
    el<HTMLSelectElement>("mode").onchange = (ev) =>
      editor.dispatch({ type: "set-mode", mode: (ev.target as HTMLSelectElement).value as Mode });
    el<HTMLSelectElement>("class").onchange = (ev) => {
      const value = (ev.target as HTMLSelectElement).value;
      editor.dispatch({ type: "set-class", classLabel: value ? (value as ClassLabel) : null });
    };
    el<HTMLInputElement>("zoom").oninput = (ev) =>
      editor.setZoom(Number((ev.target as HTMLInputElement).value));
    el<HTMLButtonElement>("clear").onclick = () => editor.dispatch({ type: "clear-mask" });
    el<HTMLButtonElement>("undo").onclick = () => editor.dispatch({ type: "undo" });
    el<HTMLButtonElement>("submit").onclick = () => {
      const n = Number(el<HTMLInputElement>("variants").value) || 3;
      const seed = Number(el<HTMLInputElement>("seed").value) || 0;
      void editor.submit(n, seed);
    };
  };
}

void boot();
