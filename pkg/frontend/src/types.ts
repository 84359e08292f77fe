export type Tool = "rect" | "brush" | "instance-pick";

export type Mode = "restore" | "place" | "precise_removal" | "mask_insertion";

export type ClassLabel = "car" | "pedestrian";

/** Grayscale bitmap; 255 = keep, 0 = hole. Row-major, length = width * height. */
export interface MaskBitmap {
  width: number;
  height: number;
  data: Uint8Array;
}

/** RGB image as delivered by the server (decoded PNG bytes kept verbatim). */
export interface ImageRef {
  width: number;
  height: number;
  /** base-64 PNG as it crossed the wire; the canvas layer decodes it. */
  png: string;
}

export interface VariantResult {
  image: ImageRef;
  segmentation: string; // base-64 PNG of class IDs
  seed: number;
}

export interface Gallery {
  variants: VariantResult[];
  /** indices of requests that failed; failures never clear the gallery. */
  failed: number[];
}

export interface EditorSession {
  /** Undo stack of accepted results; never empty, base image at the bottom. */
  undoStack: ImageRef[];
  mask: MaskBitmap;
  tool: Tool;
  mode: Mode;
  classLabel: ClassLabel | null;
  brushRadius: number;
  gallery: Gallery | null;
  /** Set when the server is unreachable; cleared by the next success. */
  serverError: string | null;
  /** Served segmentation for the current image, if any (class-ID bitmap). */
  segmentation: MaskBitmap | null;
}
