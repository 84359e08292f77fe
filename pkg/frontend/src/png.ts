/**
 * Minimal deterministic PNG encoder for mask bitmaps (8-bit grayscale,
 * stored/uncompressed deflate blocks). Canvas `toBlob` output varies across
 * browsers; encoding the bitmap ourselves keeps the wire bytes reproducible
 * and trivially decodable on the server.
 */

import type { MaskBitmap } from "./types";

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (const b of bytes) c = CRC_TABLE[(c ^ b) & 0xff]! ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function adler32(bytes: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (const byte of bytes) {
    a = (a + byte) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32be(value: number): Uint8Array {
  return new Uint8Array([(value >>> 24) & 0xff, (value >>> 16) & 0xff,
                         (value >>> 8) & 0xff, value & 0xff]);
}

function concat(parts: Uint8Array[]): Uint8Array {
  const out = new Uint8Array(parts.reduce((n, p) => n + p.length, 0));
  let offset = 0;
  for (const p of parts) {
    out.set(p, offset);
    offset += p.length;
  }
  return out;
}

function chunk(type: string, body: Uint8Array): Uint8Array {
  const tag = new Uint8Array([...type].map((c) => c.charCodeAt(0)));
  const payload = concat([tag, body]);
  return concat([u32be(body.length), payload, u32be(crc32(payload))]);
}

/** zlib stream with stored (BTYPE=00) deflate blocks only. */
function zlibStored(raw: Uint8Array): Uint8Array {
  const parts: Uint8Array[] = [new Uint8Array([0x78, 0x01])];
  const MAX = 65535;
  for (let offset = 0; offset < raw.length || offset === 0; offset += MAX) {
    const block = raw.subarray(offset, Math.min(raw.length, offset + MAX));
    const final = offset + MAX >= raw.length ? 1 : 0;
    const len = block.length;
    parts.push(new Uint8Array([final, len & 0xff, (len >> 8) & 0xff,
                               ~len & 0xff, (~len >> 8) & 0xff]));
    parts.push(block);
    if (final) break;
  }
  parts.push(u32be(adler32(raw)));
  return concat(parts);
}

export function encodeGrayPng(mask: MaskBitmap): Uint8Array {
  const { width, height, data } = mask;
  if (data.length !== width * height) throw new Error("bitmap size mismatch");
  const raw = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0; // filter type None
    raw.set(data.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }
  const ihdr = concat([u32be(width), u32be(height),
                       new Uint8Array([8, 0, 0, 0, 0])]); // 8-bit grayscale
  return concat([
    new Uint8Array([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", zlibStored(raw)),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

export function encodeGrayPngBase64(mask: MaskBitmap): string {
  const bytes = encodeGrayPng(mask);
  if (typeof btoa === "function") {
    let bin = "";
    for (const b of bytes) bin += String.fromCharCode(b);
    return btoa(bin);
  }
  return Buffer.from(bytes).toString("base64");
}
