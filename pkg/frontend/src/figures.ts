/**
 * Figure builders. Data, fits and verdicts come straight from the harness
 * outputs; nothing here recomputes statistics, the annotations quote
 * report.json verbatim.
 */

import {
  CellRow,
  CellsFile,
  PerKEntry,
  ReportFile,
  ResultEntry,
  SchemaError,
} from "./schema";
import { Mark, Scene } from "./scene";

const W = 800;
const H = 560;
const MARGIN = { left: 80, right: 24, top: 64, bottom: 56 };

const COLORS = {
  axis: "#444444",
  grid: "#dddddd",
  cells: "#b8c4d8",
  mean: "#1a1a1a",
  power: "#1f5fbf",
  concave: "#2a7e2a",
  identity: "#888888",
  pass: "#2a7e2a",
  fail: "#b03030",
  inconclusive: "#808080",
};

class LogScale {
  constructor(
    public lo: number,
    public hi: number,
    public pxLo: number,
    public pxHi: number
  ) {}

  toPx(v: number): number {
    const t = (Math.log10(v) - Math.log10(this.lo)) / (Math.log10(this.hi) - Math.log10(this.lo));
    return this.pxLo + t * (this.pxHi - this.pxLo);
  }

  ticks(): number[] {
    const out: number[] = [];
    for (let e = Math.ceil(Math.log10(this.lo) - 1e-9); e <= Math.floor(Math.log10(this.hi) + 1e-9); e++) {
      out.push(10 ** e);
    }
    return out;
  }
}

function logScale(values: number[], pxLo: number, pxHi: number): LogScale {
  const pos = values.filter((v) => Number.isFinite(v) && v > 0);
  if (pos.length === 0) throw new SchemaError("no positive values to place on a log axis");
  let lo = Math.min(...pos);
  let hi = Math.max(...pos);
  if (lo === hi) {
    lo /= 2;
    hi *= 2;
  }
  // pad by a fifth of a decade each side
  lo = 10 ** (Math.log10(lo) - 0.2);
  hi = 10 ** (Math.log10(hi) + 0.2);
  return new LogScale(lo, hi, pxLo, pxHi);
}

function tickLabel(v: number): string {
  const e = Math.round(Math.log10(v));
  if (e >= -3 && e <= 3) {
    return v >= 1 ? String(Math.round(v)) : v.toFixed(-e);
  }
  return `1e${e}`;
}

function axes(xs: LogScale, ys: LogScale, xLabel: string, yLabel: string): Mark[] {
  const marks: Mark[] = [];
  const x0 = MARGIN.left;
  const x1 = W - MARGIN.right;
  const y0 = H - MARGIN.bottom;
  const y1 = MARGIN.top;
  for (const t of xs.ticks()) {
    const px = xs.toPx(t);
    marks.push({ kind: "line", x1: px, y1: y0, x2: px, y2: y1, color: COLORS.grid, width: 1 });
    marks.push({
      kind: "text",
      x: px,
      y: y0 + 18,
      text: tickLabel(t),
      size: 11,
      color: COLORS.axis,
      anchor: "middle",
    });
  }
  for (const t of ys.ticks()) {
    const py = ys.toPx(t);
    marks.push({ kind: "line", x1: x0, y1: py, x2: x1, y2: py, color: COLORS.grid, width: 1 });
    marks.push({
      kind: "text",
      x: x0 - 6,
      y: py + 4,
      text: tickLabel(t),
      size: 11,
      color: COLORS.axis,
      anchor: "end",
    });
  }
  marks.push({ kind: "line", x1: x0, y1: y0, x2: x1, y2: y0, color: COLORS.axis, width: 1 });
  marks.push({ kind: "line", x1: x0, y1: y0, x2: x0, y2: y1, color: COLORS.axis, width: 1 });
  marks.push({
    kind: "text",
    x: (x0 + x1) / 2,
    y: H - 14,
    text: xLabel,
    size: 12,
    color: COLORS.axis,
    anchor: "middle",
  });
  marks.push({
    kind: "text",
    x: x0,
    y: y1 - 8,
    text: yLabel,
    size: 12,
    color: COLORS.axis,
    anchor: "start",
  });
  return marks;
}

function num(x: number | null | undefined): string {
  return x === null || x === undefined || !Number.isFinite(x) ? "n/a" : String(x);
}

export interface ResponseGroup {
  learner: string;
  family: string;
  K: number;
  entry: PerKEntry;
  result: ResultEntry;
}

export function responseGroups(report: ReportFile): ResponseGroup[] {
  const groups: ResponseGroup[] = [];
  for (const result of report.results) {
    for (const entry of result.per_K) {
      if (entry.response_curve) {
        groups.push({
          learner: result.learner,
          family: result.family,
          K: entry.K,
          entry,
          result,
        });
      }
    }
  }
  return groups;
}

/** Scatter + error bars + power-law fit + concave fit + identity line. */
export function buildResponseCurve(group: ResponseGroup, cells: CellsFile): Scene {
  const curve = group.entry.response_curve!;
  if (curve.levels.length < 5) {
    throw new SchemaError(
      `response curve for ${group.learner} K=${group.K} has ${curve.levels.length} levels, need at least 5`
    );
  }
  const levels = curve.levels.filter((l) => l.v_mean !== null && l.r_mean !== null);
  const vs = levels.map((l) => l.v_mean as number);
  const rs = levels.map((l) => l.r_mean as number);
  const own = cells.rows.filter(
    (r) => r.phase === "sweep" && r.learner === group.learner && r.K === group.K && r.status === "ok"
  );
  const xs = logScale(
    vs.concat(own.map((r) => r.vPath)),
    MARGIN.left,
    W - MARGIN.right
  );
  const ys = logScale(
    rs.concat(
      own.map((r) => r.dynRegret),
      levels.map((l) => (l.r_mean as number) + (l.r_sd ?? 0)),
      vs.map((v) => curve.domination.scale * v)
    ),
    H - MARGIN.bottom,
    MARGIN.top
  );

  const marks: Mark[] = axes(xs, ys, "realized volatility (path length)", "worst-case dynamic regret");
  const clampY = (v: number) => Math.max(v, ys.lo);

  // identity reference: R = scale * V
  marks.push({
    kind: "line",
    x1: xs.toPx(xs.lo),
    y1: ys.toPx(clampY(curve.domination.scale * xs.lo)),
    x2: xs.toPx(xs.hi),
    y2: ys.toPx(Math.min(curve.domination.scale * xs.hi, ys.hi)),
    color: COLORS.identity,
    width: 1,
    dash: [6, 4],
  });
  marks.push({
    kind: "text",
    x: W - MARGIN.right - 4,
    y: ys.toPx(Math.min(curve.domination.scale * xs.hi, ys.hi)) - 6,
    text: `identity (scale=${curve.domination.scale})`,
    size: 10,
    color: COLORS.identity,
    anchor: "end",
  });

  // per-cell scatter, faint
  for (const r of own) {
    if (r.vPath > 0 && r.dynRegret > 0) {
      marks.push({
        kind: "circle",
        cx: xs.toPx(r.vPath),
        cy: ys.toPx(r.dynRegret),
        r: 1.5,
        color: COLORS.cells,
        fill: true,
      });
    }
  }

  // power-law fit over the observed volatility span
  const beta = curve.power_law.beta;
  const logC = curve.power_law.log_c;
  if (beta !== null && logC !== null) {
    const vLo = Math.min(...vs.filter((v) => v > 0));
    const vHi = Math.max(...vs);
    const rAt = (v: number) => Math.exp(logC + beta * Math.log(v));
    marks.push({
      kind: "line",
      x1: xs.toPx(vLo),
      y1: ys.toPx(clampY(rAt(vLo))),
      x2: xs.toPx(vHi),
      y2: ys.toPx(clampY(rAt(vHi))),
      color: COLORS.power,
      width: 2,
    });
  }

  // concave nondecreasing fit, drawn through the level grid
  let prev: [number, number] | null = null;
  curve.concave_fit.forEach((h, i) => {
    const v = curve.levels[i]?.v_mean;
    if (h === null || v === null || v === undefined || v <= 0 || h <= 0) {
      prev = null;
      return;
    }
    const pt: [number, number] = [xs.toPx(v), ys.toPx(clampY(h))];
    if (prev) {
      marks.push({
        kind: "line",
        x1: prev[0],
        y1: prev[1],
        x2: pt[0],
        y2: pt[1],
        color: COLORS.concave,
        width: 2,
      });
    }
    prev = pt;
  });

  // level means with +-sd error bars
  levels.forEach((l) => {
    const v = l.v_mean as number;
    const r = l.r_mean as number;
    if (v <= 0) return;
    const sd = l.r_sd ?? 0;
    if (r > 0) {
      marks.push({
        kind: "line",
        x1: xs.toPx(v),
        y1: ys.toPx(clampY(Math.max(r - sd, ys.lo))),
        x2: xs.toPx(v),
        y2: ys.toPx(clampY(r + sd)),
        color: COLORS.mean,
        width: 1,
      });
      marks.push({ kind: "circle", cx: xs.toPx(v), cy: ys.toPx(r), r: 3, color: COLORS.mean, fill: true });
    }
  });

  // annotations: title, fit numbers, verdicts (quoted from the report)
  marks.push({
    kind: "text",
    x: MARGIN.left,
    y: 20,
    text: `response curve - ${group.learner} on ${group.family} (K=${group.K})`,
    size: 13,
    color: COLORS.mean,
    anchor: "start",
  });
  const ci = curve.power_law.beta_ci;
  marks.push({
    kind: "text",
    x: MARGIN.left,
    y: 36,
    text: `beta=${num(beta)} ci=[${num(ci?.[0])}, ${num(ci?.[1])}]`,
    size: 11,
    color: COLORS.power,
    anchor: "start",
  });
  const v = curve.verdicts;
  const kStar = curve.estimated_order;
  const verdictText =
    `concave=${v.strictly_concave_in_V} dominated=${v.dominated_by_identity} ` +
    `sublinear=${v.sublinear_in_T}` +
    (kStar !== null && kStar !== undefined ? ` K*=${kStar}` : "");
  marks.push({
    kind: "text",
    x: MARGIN.left,
    y: 52,
    text: verdictText,
    size: 11,
    color: COLORS.axis,
    anchor: "start",
  });
  return { width: W, height: H, marks };
}

/** Log-log regret against horizon for one (learner, K), slope from report. */
export function buildRegretVsT(group: ResponseGroup, cells: CellsFile): Scene {
  const rows = cells.rows.filter(
    (r) => r.phase === "horizon" && r.learner === group.learner && r.K === group.K && r.status === "ok"
  );
  const horizons = [...new Set(rows.map((r) => r.T))].sort((a, b) => a - b);
  if (horizons.length < 3) {
    throw new SchemaError(
      `regret-vs-T for ${group.learner} K=${group.K} needs at least 3 horizons, found ${horizons.length}`
    );
  }
  const means = horizons.map((T) => {
    const vals = rows.filter((r) => r.T === T).map((r) => r.dynRegret);
    return vals.reduce((a, b) => a + b, 0) / vals.length;
  });
  const sub = group.entry.sublinearity;
  const slope = sub?.slope ?? null;

  const xs = logScale(horizons, MARGIN.left, W - MARGIN.right);
  const positives = means.filter((m) => m > 0);
  const ys = logScale(
    rows.map((r) => r.dynRegret).concat(positives.length ? positives : [1]),
    H - MARGIN.bottom,
    MARGIN.top
  );
  const marks: Mark[] = axes(xs, ys, "horizon T", "worst-case dynamic regret");

  for (const r of rows) {
    if (r.dynRegret > 0) {
      marks.push({
        kind: "circle",
        cx: xs.toPx(r.T),
        cy: ys.toPx(r.dynRegret),
        r: 1.5,
        color: COLORS.cells,
        fill: true,
      });
    }
  }
  horizons.forEach((T, i) => {
    if (means[i] > 0) {
      marks.push({ kind: "circle", cx: xs.toPx(T), cy: ys.toPx(means[i]), r: 3, color: COLORS.mean, fill: true });
    }
  });

  // slope line anchored at the geometric center of the positive means
  if (slope !== null && positives.length >= 2) {
    const anchorX = Math.exp(
      horizons.reduce((a, T, i) => (means[i] > 0 ? a + Math.log(T) : a), 0) / positives.length
    );
    const anchorY = Math.exp(
      means.reduce((a, m) => (m > 0 ? a + Math.log(m) : a), 0) / positives.length
    );
    const yAt = (T: number) => anchorY * (T / anchorX) ** slope;
    marks.push({
      kind: "line",
      x1: xs.toPx(horizons[0]),
      y1: ys.toPx(Math.max(yAt(horizons[0]), ys.lo)),
      x2: xs.toPx(horizons[horizons.length - 1]),
      y2: ys.toPx(Math.min(yAt(horizons[horizons.length - 1]), ys.hi)),
      color: COLORS.power,
      width: 2,
    });
  }

  marks.push({
    kind: "text",
    x: MARGIN.left,
    y: 20,
    text: `regret vs horizon - ${group.learner} on ${group.family} (K=${group.K})`,
    size: 13,
    color: COLORS.mean,
    anchor: "start",
  });
  marks.push({
    kind: "text",
    x: MARGIN.left,
    y: 36,
    text:
      `slope=${num(slope)} ci=[${num(sub?.slope_ci?.[0])}, ${num(sub?.slope_ci?.[1])}]` +
      ` verdict=${sub?.verdict ?? "n/a"}` +
      (sub?.shifted ? " (shifted)" : ""),
    size: 11,
    color: COLORS.power,
    anchor: "start",
  });
  return { width: W, height: H, marks };
}

/** One-page certification summary: verdict grid with fit numbers. */
export function buildVerdictTable(report: ReportFile): Scene {
  const rows: string[][] = [];
  const rowColors: string[][] = [];
  for (const result of report.results) {
    for (const entry of result.per_K) {
      const curve = entry.response_curve;
      const verdicts = entry.verdicts ?? curve?.verdicts ?? {};
      const cells = [
        result.learner,
        String(entry.K),
        verdicts.strictly_concave_in_V ?? "n/a",
        verdicts.dominated_by_identity ?? "n/a",
        verdicts.sublinear_in_T ?? "n/a",
        curve ? num(curve.power_law.beta) : "n/a",
        entry.sublinearity ? num(entry.sublinearity.slope) : "n/a",
        result.K_star !== undefined ? String(result.K_star ?? "none") : "n/a",
      ];
      rows.push(cells);
      const color = (verdict: string) =>
        verdict === "pass" ? COLORS.pass : verdict === "fail" ? COLORS.fail : COLORS.inconclusive;
      rowColors.push([
        COLORS.mean,
        COLORS.mean,
        color(cells[2]),
        color(cells[3]),
        color(cells[4]),
        COLORS.axis,
        COLORS.axis,
        COLORS.mean,
      ]);
    }
  }
  const header = ["learner", "K", "concave", "dominated", "sublinear", "beta", "slope", "K*"];
  const colX = [30, 190, 240, 330, 430, 520, 620, 720];
  const rowH = 22;
  const height = 90 + rowH * rows.length + 20;
  const marks: Mark[] = [];
  marks.push({
    kind: "text",
    x: 30,
    y: 28,
    text: `certification summary - ${report.name} (${report.mode})`,
    size: 14,
    color: COLORS.mean,
    anchor: "start",
  });
  marks.push({
    kind: "text",
    x: 30,
    y: 48,
    text: `config ${report.config_hash}  tool ${report.version}` + (report.incomplete ? "  INCOMPLETE" : ""),
    size: 11,
    color: report.incomplete ? COLORS.fail : COLORS.axis,
    anchor: "start",
  });
  header.forEach((h, i) =>
    marks.push({ kind: "text", x: colX[i], y: 76, text: h, size: 11, color: COLORS.axis, anchor: "start" })
  );
  marks.push({ kind: "line", x1: 30, y1: 82, x2: 780, y2: 82, color: COLORS.axis, width: 1 });
  rows.forEach((cells, r) => {
    cells.forEach((text, c) => {
      marks.push({
        kind: "text",
        x: colX[c],
        y: 76 + rowH * (r + 1),
        text,
        size: 11,
        color: rowColors[r][c],
        anchor: "start",
      });
    });
  });
  return { width: W, height, marks };
}
