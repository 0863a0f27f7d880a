/**
 * A tiny retained scene: figures build a list of marks, which one writer
 * serializes to SVG text and another rasterizes to PNG. Rendering is fully
 * deterministic; no randomness, timestamps or environment state enter.
 */

export type Anchor = "start" | "middle" | "end";

export interface LineMark {
  kind: "line";
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  color: string;
  width: number;
  dash?: number[];
}

export interface CircleMark {
  kind: "circle";
  cx: number;
  cy: number;
  r: number;
  color: string;
  fill: boolean;
}

export interface RectMark {
  kind: "rect";
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
  fill: boolean;
}

export interface TextMark {
  kind: "text";
  x: number;
  y: number; // baseline
  text: string;
  size: number;
  color: string;
  anchor: Anchor;
}

export type Mark = LineMark | CircleMark | RectMark | TextMark;

export interface Scene {
  width: number;
  height: number;
  marks: Mark[];
}

const fmt = (x: number) => (Number.isInteger(x) ? String(x) : x.toFixed(2));

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function sceneToSvg(scene: Scene): string {
  const out: string[] = [];
  out.push(`<?xml version="1.0" encoding="UTF-8"?>`);
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" height="${scene.height}" ` +
      `viewBox="0 0 ${scene.width} ${scene.height}">`
  );
  out.push(`<rect x="0" y="0" width="${scene.width}" height="${scene.height}" fill="#ffffff"/>`);
  for (const m of scene.marks) {
    switch (m.kind) {
      case "line": {
        const dash = m.dash ? ` stroke-dasharray="${m.dash.join(",")}"` : "";
        out.push(
          `<line x1="${fmt(m.x1)}" y1="${fmt(m.y1)}" x2="${fmt(m.x2)}" y2="${fmt(m.y2)}" ` +
            `stroke="${m.color}" stroke-width="${fmt(m.width)}"${dash}/>`
        );
        break;
      }
      case "circle":
        out.push(
          `<circle cx="${fmt(m.cx)}" cy="${fmt(m.cy)}" r="${fmt(m.r)}" ` +
            (m.fill ? `fill="${m.color}"/>` : `fill="none" stroke="${m.color}"/>`)
        );
        break;
      case "rect":
        out.push(
          `<rect x="${fmt(m.x)}" y="${fmt(m.y)}" width="${fmt(m.w)}" height="${fmt(m.h)}" ` +
            (m.fill ? `fill="${m.color}"/>` : `fill="none" stroke="${m.color}"/>`)
        );
        break;
      case "text":
        out.push(
          `<text x="${fmt(m.x)}" y="${fmt(m.y)}" font-family="monospace" font-size="${m.size}" ` +
            `fill="${m.color}" text-anchor="${m.anchor}">${escapeXml(m.text)}</text>`
        );
        break;
    }
  }
  out.push("</svg>");
  return out.join("\n") + "\n";
}
