export {
  CELLS_COLUMNS,
  CellRow,
  CellsFile,
  LevelSummary,
  PerKEntry,
  ReportFile,
  ResponseCurveDoc,
  ResultEntry,
  SchemaError,
  SublinearityDoc,
  checkHashesAgree,
  parseCellsCsv,
  parseReport,
} from "./schema";
export { Mark, Scene, sceneToSvg } from "./scene";
export { rasterize, sceneToPng } from "./raster";
export {
  ResponseGroup,
  buildRegretVsT,
  buildResponseCurve,
  buildVerdictTable,
  responseGroups,
} from "./figures";
export { FigureKind, FigureSpec, Format, KINDS, RenderResult, loadInputs, renderFigures } from "./render";
