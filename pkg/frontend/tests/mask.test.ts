import { describe, expect, it } from "vitest";
import { HOLE, KEEP, brushStroke, createMask, drawRect, holeCount, masksEqual, pickInstance } from "../src/mask";
import type { MaskBitmap } from "../src/types";

describe("drawRect", () => {
  it("rect (10,10,50,50) carves exactly 2500 hole pixels", () => {
    const mask = drawRect(createMask(128, 128), 10, 10, 50, 50);
    expect(holeCount(mask)).toBe(2500);
    expect(mask.data[10 * 128 + 10]).toBe(HOLE);
    expect(mask.data[9 * 128 + 10]).toBe(KEEP);
    expect(mask.data[59 * 128 + 59]).toBe(HOLE);
    expect(mask.data[60 * 128 + 60]).toBe(KEEP);
  });

  it("snaps fractional coordinates to integer pixels", () => {
    const a = drawRect(createMask(64, 64), 5.4, 5.4, 10.2, 10.2);
    const b = drawRect(createMask(64, 64), 5, 5, 10, 10);
    expect(masksEqual(a, b)).toBe(true);
  });

  it("clamps rects that overrun the bitmap", () => {
    const mask = drawRect(createMask(32, 32), 24, 24, 100, 100);
    expect(holeCount(mask)).toBe(8 * 8);
  });

  it("does not mutate its input", () => {
    const base = createMask(16, 16);
    drawRect(base, 0, 0, 8, 8);
    expect(holeCount(base)).toBe(0);
  });
});

describe("brushStroke", () => {
  it("a single point stamps one disc", () => {
    const mask = brushStroke(createMask(64, 64), [[32, 32]], 5);
    const n = holeCount(mask);
    expect(n).toBeGreaterThan(60);     // area of r=5 disc ~ 78
    expect(n).toBeLessThan(100);
    expect(mask.data[32 * 64 + 32]).toBe(HOLE);
  });

  it("a segment sweeps a continuous band", () => {
    const mask = brushStroke(createMask(64, 64), [[10, 32], [50, 32]], 3);
    for (let x = 10; x <= 50; x++) {
      expect(mask.data[32 * 64 + x]).toBe(HOLE);
    }
  });

  it("empty stroke leaves the mask unchanged", () => {
    const mask = brushStroke(createMask(32, 32), [], 4);
    expect(holeCount(mask)).toBe(0);
  });
});

describe("pickInstance", () => {
  function seg(): MaskBitmap {
    const s = createMask(32, 32);
    s.data.fill(0); // background class 0
    for (let y = 4; y < 12; y++) for (let x = 4; x < 12; x++) s.data[y * 32 + x] = 6;
    for (let y = 20; y < 24; y++) for (let x = 20; x < 24; x++) s.data[y * 32 + x] = 6;
    return s;
  }

  it("carves exactly the clicked connected component", () => {
    const mask = pickInstance(createMask(32, 32), seg(), 6, 6, new Set([6]));
    expect(holeCount(mask)).toBe(64); // only the first blob, not the second
    expect(mask.data[21 * 32 + 21]).toBe(KEEP);
  });

  it("clicking background returns an empty mask (submit stays disabled)", () => {
    const mask = pickInstance(createMask(32, 32), seg(), 0, 0, new Set([6]));
    expect(holeCount(mask)).toBe(0);
  });

  it("clicks outside the bitmap are ignored", () => {
    const mask = pickInstance(createMask(32, 32), seg(), -3, 99, new Set([6]));
    expect(holeCount(mask)).toBe(0);
  });
});
