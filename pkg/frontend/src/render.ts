/**
 * Figure specs and file output. A spec names the inputs, the figure kinds
 * and the destination; rendering refuses inputs whose config hashes
 * disagree and emits every figure as both SVG and PNG (or a subset).
 */

import * as fs from "node:fs";
import * as path from "node:path";
import {
  buildRegretVsT,
  buildResponseCurve,
  buildVerdictTable,
  responseGroups,
} from "./figures";
import { sceneToPng } from "./raster";
import { Scene, sceneToSvg } from "./scene";
import { CellsFile, ReportFile, SchemaError, checkHashesAgree, parseCellsCsv, parseReport } from "./schema";

export const KINDS = ["response_curve", "regret_vs_T", "verdict_table"] as const;
export type FigureKind = (typeof KINDS)[number];
export type Format = "svg" | "png";

export interface FigureSpec {
  cellsPath: string;
  reportPath: string;
  outDir: string;
  kinds: FigureKind[];
  formats: Format[];
  /** explicit kinds fail hard on missing data; defaulted kinds skip with a warning */
  explicitKinds: boolean;
}

export interface RenderResult {
  written: string[];
  warnings: string[];
}

function slug(s: string): string {
  return s.replace(/[^A-Za-z0-9_.-]+/g, "_");
}

function writeScene(
  scene: Scene,
  outDir: string,
  name: string,
  formats: Format[],
  written: string[]
): void {
  for (const format of formats) {
    const file = path.join(outDir, `${name}.${format}`);
    if (format === "svg") fs.writeFileSync(file, sceneToSvg(scene), "utf-8");
    else fs.writeFileSync(file, sceneToPng(scene));
    written.push(file);
  }
}

export function loadInputs(spec: FigureSpec): { cells: CellsFile; report: ReportFile } {
  const cells = parseCellsCsv(fs.readFileSync(spec.cellsPath, "utf-8"));
  const report = parseReport(fs.readFileSync(spec.reportPath, "utf-8"));
  checkHashesAgree(cells, report);
  return { cells, report };
}

export function renderFigures(spec: FigureSpec): RenderResult {
  const { cells, report } = loadInputs(spec);
  fs.mkdirSync(spec.outDir, { recursive: true });
  const written: string[] = [];
  const warnings: string[] = [];
  const groups = responseGroups(report);

  for (const kind of spec.kinds) {
    if (kind === "verdict_table") {
      writeScene(buildVerdictTable(report), spec.outDir, "verdicts", spec.formats, written);
      continue;
    }
    if (groups.length === 0) {
      const msg = `no (learner, K) groups with a response curve in ${spec.reportPath}`;
      if (spec.explicitKinds) throw new SchemaError(msg);
      warnings.push(`skipped ${kind}: ${msg}`);
      continue;
    }
    for (const group of groups) {
      const name = `${kind === "response_curve" ? "response" : "regret_vs_T"}_${slug(group.learner)}_${slug(group.family)}_K${group.K}`;
      try {
        const scene =
          kind === "response_curve" ? buildResponseCurve(group, cells) : buildRegretVsT(group, cells);
        writeScene(scene, spec.outDir, name, spec.formats, written);
      } catch (e) {
        if (e instanceof SchemaError && !spec.explicitKinds) {
          warnings.push(`skipped ${name}: ${e.message}`);
        } else {
          throw e;
        }
      }
    }
  }
  return { written, warnings };
}
