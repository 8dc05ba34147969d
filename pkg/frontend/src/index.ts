export { loadCsv, requireColumns, numberColumn, SchemaError } from "./csv.js";
export { renderFigure, fadeOpacities, KINDS } from "./figures.js";
export type { Kind, Style } from "./figures.js";
