import type { MaskBitmap } from "./types";

export const KEEP = 255;
export const HOLE = 0;

export function createMask(width: number, height: number): MaskBitmap {
  const data = new Uint8Array(width * height);
  data.fill(KEEP);
  return { width, height, data };
}

export function cloneMask(mask: MaskBitmap): MaskBitmap {
  return { width: mask.width, height: mask.height, data: new Uint8Array(mask.data) };
}

export function holeCount(mask: MaskBitmap): number {
  let n = 0;
  for (const v of mask.data) if (v === HOLE) n++;
  return n;
}

/**
 * Carve a rectangular hole. Coordinates snap to integer pixels and clamp to
 * the bitmap; (x, y) is the top-left corner, the rect spans w by h pixels.
 */
export function drawRect(mask: MaskBitmap, x: number, y: number, w: number, h: number): MaskBitmap {
  const out = cloneMask(mask);
  const x0 = Math.max(0, Math.round(x));
  const y0 = Math.max(0, Math.round(y));
  const x1 = Math.min(mask.width, Math.round(x) + Math.round(w));
  const y1 = Math.min(mask.height, Math.round(y) + Math.round(h));
  for (let row = y0; row < y1; row++) {
    out.data.fill(HOLE, row * mask.width + x0, row * mask.width + x1);
  }
  return out;
}

function stampDisc(data: Uint8Array, width: number, height: number,
                   cx: number, cy: number, radius: number): void {
  const r2 = radius * radius;
  const y0 = Math.max(0, Math.floor(cy - radius));
  const y1 = Math.min(height - 1, Math.ceil(cy + radius));
  const x0 = Math.max(0, Math.floor(cx - radius));
  const x1 = Math.min(width - 1, Math.ceil(cx + radius));
  for (let y = y0; y <= y1; y++) {
    for (let x = x0; x <= x1; x++) {
      const dx = x - cx;
      const dy = y - cy;
      if (dx * dx + dy * dy <= r2) data[y * width + x] = HOLE;
    }
  }
}

/**
 * Freeform brush: a polyline of points, each segment rasterized as a swept
 * disc of the given radius. A single point stamps one disc.
 */
export function brushStroke(mask: MaskBitmap, points: Array<[number, number]>,
                            radius: number): MaskBitmap {
  const out = cloneMask(mask);
  if (points.length === 0) return out;
  let [px, py] = points[0]!;
  stampDisc(out.data, out.width, out.height, px, py, radius);
  for (let i = 1; i < points.length; i++) {
    const [qx, qy] = points[i]!;
    const steps = Math.max(1, Math.ceil(Math.hypot(qx - px, qy - py)));
    for (let s = 1; s <= steps; s++) {
      stampDisc(out.data, out.width, out.height,
                px + ((qx - px) * s) / steps, py + ((qy - py) * s) / steps, radius);
    }
    px = qx;
    py = qy;
  }
  return out;
}

/**
 * Instance pick: flood-fill the connected component of the clicked class ID
 * in the served segmentation and carve its silhouette. Clicking a class not
 * in `pickable` (background) returns the mask unchanged — the empty mask
 * keeps submit disabled.
 */
export function pickInstance(mask: MaskBitmap, seg: MaskBitmap, x: number, y: number,
                             pickable: Set<number>): MaskBitmap {
  const px = Math.round(x);
  const py = Math.round(y);
  if (px < 0 || py < 0 || px >= seg.width || py >= seg.height) return cloneMask(mask);
  const target = seg.data[py * seg.width + px]!;
  if (!pickable.has(target)) return cloneMask(mask);

  const out = cloneMask(mask);
  const visited = new Uint8Array(seg.width * seg.height);
  const queue: number[] = [py * seg.width + px];
  visited[queue[0]!] = 1;
  while (queue.length > 0) {
    const idx = queue.pop()!;
    out.data[idx] = HOLE;
    const cx = idx % seg.width;
    const cy = (idx - cx) / seg.width;
    for (const [nx, ny] of [[cx - 1, cy], [cx + 1, cy], [cx, cy - 1], [cx, cy + 1]] as const) {
      if (nx < 0 || ny < 0 || nx >= seg.width || ny >= seg.height) continue;
      const nidx = ny * seg.width + nx;
      if (!visited[nidx] && seg.data[nidx] === target) {
        visited[nidx] = 1;
        queue.push(nidx);
      }
    }
  }
  return out;
}

export function masksEqual(a: MaskBitmap, b: MaskBitmap): boolean {
  if (a.width !== b.width || a.height !== b.height) return false;
  for (let i = 0; i < a.data.length; i++) if (a.data[i] !== b.data[i]) return false;
  return true;
}
