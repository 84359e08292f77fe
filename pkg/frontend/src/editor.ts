/**
 * Canvas wiring: renders the current image with the mask layer on top and
 * translates pointer events into session actions. All state lives in the
 * EditorSession reducer; this file only draws and dispatches.
 */

import type { Action } from "./session";
import { canSubmit, createSession, currentImage, reduce } from "./session";
import type { EditorSession, ImageRef } from "./types";
import { HOLE } from "./mask";
import { requestVariants } from "./api";

const PICKABLE_CLASSES = [5, 6]; // pedestrian, car in every served profile

export class Editor {
  private session: EditorSession;
  private readonly log: Action[] = [];
  private zoom = 1;
  private dragStart: [number, number] | null = null;
  private strokePoints: Array<[number, number]> = [];
  private pending = false; // at most one in-flight variant batch

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly maskCanvas: HTMLCanvasElement,
    base: ImageRef,
    private readonly onChange: (session: EditorSession, canSubmitNow: boolean) => void,
  ) {
    this.session = createSession(base);
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.pointerUp(e));
    this.render();
  }

  dispatch(action: Action): void {
    this.log.push(action);
    this.session = reduce(this.session, action);
    this.render();
    this.onChange(this.session, canSubmit(this.session));
  }

  get state(): EditorSession {
    return this.session;
  }

  /** The recorded action log; replaying it reproduces `state` exactly. */
  get actionLog(): readonly Action[] {
    return this.log;
  }

  setZoom(zoom: number): void {
    this.zoom = Math.max(1, Math.floor(zoom)); // integer zoom, nearest-neighbor
    this.render();
  }

  private toImageCoords(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [(e.clientX - rect.left) / this.zoom, (e.clientY - rect.top) / this.zoom];
  }

  private pointerDown(e: PointerEvent): void {
    const pt = this.toImageCoords(e);
    if (this.session.tool === "rect") {
      this.dragStart = pt;
    } else if (this.session.tool === "brush") {
      this.strokePoints = [pt];
    } else {
      this.dispatch({ type: "instance-pick", x: pt[0], y: pt[1], pickable: PICKABLE_CLASSES });
    }
  }

  private pointerMove(e: PointerEvent): void {
    if (this.session.tool === "brush" && this.strokePoints.length > 0) {
      this.strokePoints.push(this.toImageCoords(e));
    }
  }

  private pointerUp(e: PointerEvent): void {
    if (this.session.tool === "rect" && this.dragStart) {
      const [x0, y0] = this.dragStart;
      const [x1, y1] = this.toImageCoords(e);
      this.dragStart = null;
      this.dispatch({
        type: "draw-rect",
        x: Math.min(x0, x1), y: Math.min(y0, y1),
        w: Math.abs(x1 - x0), h: Math.abs(y1 - y0),
      });
    } else if (this.session.tool === "brush" && this.strokePoints.length > 0) {
      const points = this.strokePoints;
      this.strokePoints = [];
      this.dispatch({ type: "brush-stroke", points });
    }
  }

  async submit(n: number, baseSeed: number): Promise<void> {
    if (this.pending || !canSubmit(this.session)) return;
    this.pending = true;
    try {
      const gallery = await requestVariants(this.session, n, baseSeed);
      this.dispatch({ type: "gallery-received", gallery });
    } catch (err) {
      this.dispatch({ type: "gallery-failed", message: String(err) });
    } finally {
      this.pending = false;
    }
  }

  private render(): void {
    const image = currentImage(this.session);
    const w = image.width * this.zoom;
    const h = image.height * this.zoom;
    this.canvas.width = w;
    this.canvas.height = h;
    const ctx = this.canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false; // nearest-neighbor zoom
    const img = new Image();
    img.onload = () => {
      ctx.drawImage(img, 0, 0, w, h);
      this.renderMask();
    };
    img.src = `data:image/png;base64,${image.png}`;
  }

  private renderMask(): void {
    const { mask } = this.session;
    this.maskCanvas.width = mask.width;
    this.maskCanvas.height = mask.height;
    const ctx = this.maskCanvas.getContext("2d")!;
    const overlay = ctx.createImageData(mask.width, mask.height);
    for (let i = 0; i < mask.data.length; i++) {
      if (mask.data[i] === HOLE) {
        overlay.data[i * 4] = 255;     // red hole overlay
        overlay.data[i * 4 + 3] = 110;
      }
    }
    ctx.putImageData(overlay, 0, 0);
    const main = this.canvas.getContext("2d")!;
    main.imageSmoothingEnabled = false;
    main.drawImage(this.maskCanvas, 0, 0, this.canvas.width, this.canvas.height);
  }
}
