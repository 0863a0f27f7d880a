/**
 * Software rasterizer + PNG encoder for scenes, pure Node (zlib only).
 * Aliased 1px-grid drawing with the 5x7 bitmap font; good enough for
 * figure output and exactly reproducible across runs and machines.
 */

import * as zlib from "node:zlib";
import { GLYPH_H, GLYPH_W, glyphFor } from "./font";
import { Mark, Scene } from "./scene";

type RGB = [number, number, number];

function parseColor(c: string): RGB {
  const m = /^#([0-9a-fA-F]{6})$/.exec(c);
  if (!m) return [0, 0, 0];
  const v = parseInt(m[1], 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

class Canvas {
  data: Uint8Array;
  constructor(public width: number, public height: number) {
    this.data = new Uint8Array(width * height * 3).fill(0xff);
  }

  set(x: number, y: number, rgb: RGB) {
    x = Math.round(x);
    y = Math.round(y);
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 3;
    this.data[i] = rgb[0];
    this.data[i + 1] = rgb[1];
    this.data[i + 2] = rgb[2];
  }

  fillRect(x: number, y: number, w: number, h: number, rgb: RGB) {
    for (let yy = Math.round(y); yy < Math.round(y + h); yy++)
      for (let xx = Math.round(x); xx < Math.round(x + w); xx++) this.set(xx, yy, rgb);
  }

  line(x1: number, y1: number, x2: number, y2: number, rgb: RGB, width: number, dash?: number[]) {
    // Bresenham with optional dashing; thickness by stamping a small square
    let x = Math.round(x1);
    let y = Math.round(y1);
    const ex = Math.round(x2);
    const ey = Math.round(y2);
    const dx = Math.abs(ex - x);
    const dy = -Math.abs(ey - y);
    const sx = x < ex ? 1 : -1;
    const sy = y < ey ? 1 : -1;
    let err = dx + dy;
    const period = dash ? dash.reduce((a, b) => a + b, 0) : 0;
    let dist = 0;
    const half = Math.max(0, Math.floor(width / 2));
    for (;;) {
      let draw = true;
      if (dash && period > 0) {
        let p = dist % period;
        for (let i = 0; i < dash.length; i++) {
          if (p < dash[i]) {
            draw = i % 2 === 0;
            break;
          }
          p -= dash[i];
        }
      }
      if (draw) {
        for (let oy = -half; oy <= half; oy++)
          for (let ox = -half; ox <= half; ox++) this.set(x + ox, y + oy, rgb);
      }
      if (x === ex && y === ey) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
      dist++;
    }
  }

  circle(cx: number, cy: number, r: number, rgb: RGB, fill: boolean) {
    const r2 = r * r;
    const lo = Math.floor(-r) - 1;
    const hi = Math.ceil(r) + 1;
    for (let dy = lo; dy <= hi; dy++) {
      for (let dx = lo; dx <= hi; dx++) {
        const d2 = dx * dx + dy * dy;
        if (fill ? d2 <= r2 : Math.abs(Math.sqrt(d2) - r) <= 0.6) {
          this.set(cx + dx, cy + dy, rgb);
        }
      }
    }
  }

  text(x: number, y: number, s: string, size: number, rgb: RGB, anchor: "start" | "middle" | "end") {
    const scale = Math.max(1, Math.round(size / GLYPH_H));
    const advance = (GLYPH_W + 1) * scale;
    const total = s.length * advance;
    let px = Math.round(x);
    if (anchor === "middle") px -= Math.round(total / 2);
    else if (anchor === "end") px -= total;
    const top = Math.round(y) - GLYPH_H * scale; // y is the baseline
    for (const ch of s) {
      const glyph = glyphFor(ch);
      for (let row = 0; row < GLYPH_H; row++) {
        for (let col = 0; col < GLYPH_W; col++) {
          if ((glyph[row] >> (GLYPH_W - 1 - col)) & 1) {
            this.fillRect(px + col * scale, top + row * scale, scale, scale, rgb);
          }
        }
      }
      px += advance;
    }
  }
}

export function rasterize(scene: Scene): Canvas {
  const canvas = new Canvas(Math.round(scene.width), Math.round(scene.height));
  for (const m of scene.marks as Mark[]) {
    switch (m.kind) {
      case "line":
        canvas.line(m.x1, m.y1, m.x2, m.y2, parseColor(m.color), m.width, m.dash);
        break;
      case "circle":
        canvas.circle(Math.round(m.cx), Math.round(m.cy), m.r, parseColor(m.color), m.fill);
        break;
      case "rect":
        if (m.fill) canvas.fillRect(m.x, m.y, m.w, m.h, parseColor(m.color));
        else {
          const c = parseColor(m.color);
          canvas.line(m.x, m.y, m.x + m.w, m.y, c, 1);
          canvas.line(m.x + m.w, m.y, m.x + m.w, m.y + m.h, c, 1);
          canvas.line(m.x + m.w, m.y + m.h, m.x, m.y + m.h, c, 1);
          canvas.line(m.x, m.y + m.h, m.x, m.y, c, 1);
        }
        break;
      case "text":
        canvas.text(m.x, m.y, m.text, m.size, parseColor(m.color), m.anchor);
        break;
    }
  }
  return canvas;
}

// --- PNG encoding (8-bit RGB, filter 0, single IDAT) ---------------------------

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < buf.length; i++) c = CRC_TABLE[(c ^ buf[i]) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(data.length, 0);
  head.write(type, 4, "ascii");
  const body = Buffer.concat([head.subarray(4), Buffer.from(data)]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head.subarray(0, 4), body, crc]);
}

export function canvasToPng(canvas: Canvas): Buffer {
  const { width, height, data } = canvas;
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // color type: truecolor RGB
  const raw = Buffer.alloc(height * (1 + width * 3));
  for (let y = 0; y < height; y++) {
    raw[y * (1 + width * 3)] = 0; // filter: none
    data
      .subarray(y * width * 3, (y + 1) * width * 3)
      .forEach((v, i) => (raw[y * (1 + width * 3) + 1 + i] = v));
  }
  const idat = zlib.deflateSync(raw, { level: 9 });
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

export function sceneToPng(scene: Scene): Buffer {
  return canvasToPng(rasterize(scene));
}
