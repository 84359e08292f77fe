import type { ClassLabel, EditorSession, Gallery, ImageRef, MaskBitmap, Mode, Tool } from "./types";
import { brushStroke, createMask, drawRect, holeCount, pickInstance } from "./mask";

export type Action =
  | { type: "set-tool"; tool: Tool }
  | { type: "set-mode"; mode: Mode }
  | { type: "set-class"; classLabel: ClassLabel | null }
  | { type: "set-brush-radius"; radius: number }
  | { type: "draw-rect"; x: number; y: number; w: number; h: number }
  | { type: "brush-stroke"; points: Array<[number, number]> }
  | { type: "instance-pick"; x: number; y: number; pickable: number[] }
  | { type: "clear-mask" }
  | { type: "gallery-received"; gallery: Gallery }
  | { type: "gallery-failed"; message: string }
  | { type: "set-segmentation"; seg: MaskBitmap }
  | { type: "accept-variant"; index: number }
  | { type: "undo" };

export function createSession(base: ImageRef): EditorSession {
  return {
    undoStack: [base],
    mask: createMask(base.width, base.height),
    tool: "rect",
    mode: "restore",
    classLabel: null,
    brushRadius: 8,
    gallery: null,
    serverError: null,
    segmentation: null,
  };
}

export function currentImage(session: EditorSession): ImageRef {
  return session.undoStack[session.undoStack.length - 1]!;
}

/** Submit is allowed only with a nonempty hole and, in place mode, a class. */
export function canSubmit(session: EditorSession): boolean {
  if (holeCount(session.mask) === 0) return false;
  if (session.mode === "place" && session.classLabel === null) return false;
  return true;
}

/**
 * Pure transition function: every UI event is an Action, so replaying a
 * recorded action log over the base image reproduces the session exactly.
 */
export function reduce(session: EditorSession, action: Action): EditorSession {
  switch (action.type) {
    case "set-tool":
      return { ...session, tool: action.tool };
    case "set-mode":
      return { ...session, mode: action.mode };
    case "set-class":
      return { ...session, classLabel: action.classLabel };
    case "set-brush-radius":
      return { ...session, brushRadius: Math.max(1, action.radius) };
    case "draw-rect":
      return { ...session, mask: drawRect(session.mask, action.x, action.y, action.w, action.h) };
    case "brush-stroke":
      return { ...session, mask: brushStroke(session.mask, action.points, session.brushRadius) };
    case "instance-pick": {
      if (session.segmentation === null) return session;
      const mask = pickInstance(session.mask, session.segmentation,
                                action.x, action.y, new Set(action.pickable));
      return { ...session, mask };
    }
    case "clear-mask": {
      const image = currentImage(session);
      return { ...session, mask: createMask(image.width, image.height) };
    }
    case "gallery-received":
      return { ...session, gallery: action.gallery, serverError: null };
    case "gallery-failed":
      // Server unreachable: surface the banner, leave everything else intact.
      return { ...session, serverError: action.message };
    case "set-segmentation":
      return { ...session, segmentation: action.seg };
    case "accept-variant": {
      const variant = session.gallery?.variants[action.index];
      if (!variant) return session;
      return {
        ...session,
        undoStack: [...session.undoStack, variant.image],
        mask: createMask(variant.image.width, variant.image.height),
        gallery: null,
      };
    }
    case "undo": {
      if (session.undoStack.length <= 1) return session; // base image stays
      const undoStack = session.undoStack.slice(0, -1);
      const top = undoStack[undoStack.length - 1]!;
      return { ...session, undoStack, mask: createMask(top.width, top.height) };
    }
  }
}

export function replay(base: ImageRef, actions: Action[]): EditorSession {
  return actions.reduce(reduce, createSession(base));
}
