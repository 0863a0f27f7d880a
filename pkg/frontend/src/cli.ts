#!/usr/bin/env node
/**
 * stressbed-report --cells <cells.csv> --report <report.json> --out <dir>
 *                  [--kind response_curve,regret_vs_T,verdict_table]
 *                  [--format svg,png]
 *
 * Exit codes: 0 success, 2 bad arguments or schema/hash errors.
 */

import { FigureKind, Format, KINDS, renderFigures } from "./render";
import { SchemaError } from "./schema";

interface Args {
  cells: string;
  report: string;
  out: string;
  kinds: FigureKind[];
  formats: Format[];
  explicitKinds: boolean;
}

export function parseArgs(argv: string[]): Args {
  const opts = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (!a.startsWith("--")) throw new SchemaError(`unexpected argument ${a}`);
    const key = a.slice(2);
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new SchemaError(`missing value for --${key}`);
    }
    opts.set(key, value);
    i++;
  }
  for (const key of opts.keys()) {
    if (!["cells", "report", "out", "kind", "format"].includes(key)) {
      throw new SchemaError(`unknown option --${key}`);
    }
  }
  for (const req of ["cells", "report", "out"]) {
    if (!opts.has(req)) throw new SchemaError(`--${req} is required`);
  }
  const explicitKinds = opts.has("kind");
  const kinds = (opts.get("kind")?.split(",") ?? [...KINDS]) as FigureKind[];
  for (const k of kinds) {
    if (!KINDS.includes(k)) throw new SchemaError(`unknown figure kind '${k}'`);
  }
  const formats = (opts.get("format")?.split(",") ?? ["svg", "png"]) as Format[];
  for (const f of formats) {
    if (f !== "svg" && f !== "png") throw new SchemaError(`unknown format '${f}'`);
  }
  return {
    cells: opts.get("cells")!,
    report: opts.get("report")!,
    out: opts.get("out")!,
    kinds,
    formats,
    explicitKinds,
  };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (e) {
    console.error(`usage error: ${(e as Error).message}`);
    return 2;
  }
  try {
    const result = renderFigures({
      cellsPath: args.cells,
      reportPath: args.report,
      outDir: args.out,
      kinds: args.kinds,
      formats: args.formats,
      explicitKinds: args.explicitKinds,
    });
    for (const w of result.warnings) console.warn(w);
    for (const f of result.written) console.log(f);
    console.log(`${result.written.length} file(s) written`);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError || (e as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: ${(e as Error).message}`);
      return 2;
    }
    throw e;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
