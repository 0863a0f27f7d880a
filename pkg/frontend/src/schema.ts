/**
 * Readers for the two documented stressbed output formats: cells.csv and
 * report.json. Everything else in this tool consumes the typed structures
 * produced here; nothing re-derives verdicts.
 */

export class SchemaError extends Error {}

export const CELLS_COLUMNS = [
  "run_id",
  "learner",
  "family",
  "K",
  "T",
  "level",
  "rep",
  "seed",
  "v_path",
  "v_f",
  "v_g",
  "dyn_regret_worstUK",
  "static_regret",
  "wall_ms",
  "status",
] as const;

export interface CellRow {
  runId: string;
  phase: "sweep" | "horizon";
  learner: string;
  family: string;
  K: number;
  T: number;
  level: number;
  rep: number;
  seed: number;
  vPath: number;
  vF: number;
  vG: number;
  dynRegret: number;
  staticRegret: number;
  wallMs: number;
  status: string;
}

export interface CellsFile {
  toolVersion: string;
  configHash: string | null;
  rows: CellRow[];
}

function parseFloatLoose(s: string): number {
  if (s === "" || s === "nan") return NaN;
  return Number(s);
}

/** Parse cells.csv. The format has no quoting or embedded commas. */
export function parseCellsCsv(text: string): CellsFile {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) throw new SchemaError("empty cells.csv");
  let toolVersion = "";
  let configHash: string | null = null;
  let headerIdx = 0;
  if (lines[0].startsWith("#")) {
    const m = /config_hash=([0-9a-f]+)/.exec(lines[0]);
    configHash = m ? m[1] : null;
    const v = /stressbed\s+(\S+)/.exec(lines[0]);
    toolVersion = v ? v[1] : "";
    headerIdx = 1;
  }
  const header = lines[headerIdx].split(",");
  for (const col of CELLS_COLUMNS) {
    if (!header.includes(col)) {
      throw new SchemaError(`cells.csv is missing required column '${col}'`);
    }
  }
  const idx = new Map(header.map((h, i) => [h, i]));
  const get = (parts: string[], col: string) => parts[idx.get(col)!];
  const rows: CellRow[] = [];
  for (const line of lines.slice(headerIdx + 1)) {
    const parts = line.split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(`cells.csv row has ${parts.length} fields, expected ${header.length}`);
    }
    const runId = get(parts, "run_id");
    rows.push({
      runId,
      phase: runId.startsWith("horizon-") ? "horizon" : "sweep",
      learner: get(parts, "learner"),
      family: get(parts, "family"),
      K: Number(get(parts, "K")),
      T: Number(get(parts, "T")),
      level: parseFloatLoose(get(parts, "level")),
      rep: Number(get(parts, "rep")),
      seed: Number(get(parts, "seed")),
      vPath: parseFloatLoose(get(parts, "v_path")),
      vF: parseFloatLoose(get(parts, "v_f")),
      vG: parseFloatLoose(get(parts, "v_g")),
      dynRegret: parseFloatLoose(get(parts, "dyn_regret_worstUK")),
      staticRegret: parseFloatLoose(get(parts, "static_regret")),
      wallMs: parseFloatLoose(get(parts, "wall_ms")),
      status: get(parts, "status"),
    });
  }
  return { toolVersion, configHash, rows };
}

export interface LevelSummary {
  v_target: number;
  v_mean: number | null;
  v_sd: number | null;
  r_mean: number | null;
  r_sd: number | null;
  n: number;
  aborted: number;
}

export interface ResponseCurveDoc {
  family: string;
  learner: string;
  K: number;
  horizon: number;
  levels: LevelSummary[];
  power_law: { beta: number | null; log_c: number | null; beta_ci: (number | null)[] };
  second_diff: {
    values: (number | null)[];
    ci: (number | null)[][];
    max: number | null;
    significantly_positive: boolean;
  };
  concave_fit: (number | null)[];
  domination: { scale: number; per_level: boolean[] };
  verdicts: Record<string, string>;
  estimated_order: number | null;
}

export interface SublinearityDoc {
  horizons: number[];
  r_means: (number | null)[];
  slope: number | null;
  slope_ci: (number | null)[];
  shifted: boolean;
  delta: number;
  verdict: string;
}

export interface PerKEntry {
  K: number;
  verdicts?: Record<string, string>;
  response_curve: ResponseCurveDoc | null;
  sublinearity?: SublinearityDoc;
  error?: string;
}

export interface ResultEntry {
  learner: string;
  family: string;
  K_grid: number[];
  per_K: PerKEntry[];
  certified?: boolean;
  K_star?: number | null;
}

export interface ReportFile {
  tool: string;
  version: string;
  config_hash: string;
  name: string;
  mode: string;
  incomplete: boolean;
  results: ResultEntry[];
}

export function parseReport(text: string): ReportFile {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`report.json is not valid JSON: ${(e as Error).message}`);
  }
  const rep = doc as ReportFile;
  if (rep.tool !== "stressbed") throw new SchemaError("report.json missing tool marker 'stressbed'");
  for (const key of ["config_hash", "mode", "results"] as const) {
    if (!(key in rep)) throw new SchemaError(`report.json is missing required field '${key}'`);
  }
  return rep;
}

/** Inputs produced by different experiments must not be mixed. */
export function checkHashesAgree(cells: CellsFile, report: ReportFile): void {
  if (cells.configHash !== null && cells.configHash !== report.config_hash) {
    throw new SchemaError(
      `config hash mismatch: cells.csv has ${cells.configHash}, report.json has ${report.config_hash}`
    );
  }
}
