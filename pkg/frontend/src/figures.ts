/**
 * Figure builders for the toolkit's CSV outputs.
 *
 * Collapse and raw-series plots follow the fading convention: within each
 * size group, curves at smaller layer spacing a_z are drawn more faded.
 */
import { existsSync, readFileSync } from "fs";
import { dirname, join } from "path";
import { loadCsv, numberColumn, requireColumns, SchemaError, Table } from "./csv.js";
import { makeScale, plotArea, Svg } from "./svg.js";

export const KINDS = [
  "dispersion",
  "boundary_alpha",
  "boundary_lambda",
  "scaling",
  "collapse",
  "raw_series",
] as const;
export type Kind = (typeof KINDS)[number];

export interface Style {
  logX: boolean;
  logY: boolean;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

function color(i: number): string {
  return PALETTE[i % PALETTE.length];
}

/** Opacity ladder for the fade-by-a_z convention: smaller a_z, more faded. */
export function fadeOpacities(aZValues: number[]): Map<number, number> {
  const unique = [...new Set(aZValues)].sort((a, b) => a - b);
  const out = new Map<number, number>();
  unique.forEach((v, i) => {
    const t = unique.length === 1 ? 1 : i / (unique.length - 1);
    out.set(v, 0.25 + 0.75 * t);
  });
  return out;
}

function groupBy<T>(items: T[], key: (item: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const item of items) {
    const k = key(item);
    const list = out.get(k);
    if (list) list.push(item);
    else out.set(k, [item]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// kinds
// ---------------------------------------------------------------------------

function dispersionFigure(tables: Table[], style: Style): string {
  const table = tables[0];
  requireColumns(table, ["kx", "ky", "abs_k", "eps_k", "re_omega_k", "im_omega_k", "growth_rate"]);
  const absK = numberColumn(table, "abs_k");
  const eps = numberColumn(table, "eps_k");
  const reOm = numberColumn(table, "re_omega_k");
  const imOm = numberColumn(table, "im_omega_k");
  const growth = numberColumn(table, "growth_rate");
  const absOm = reOm.map((re, i) => Math.hypot(re, imOm[i]));

  const order = absK.map((_, i) => i).sort((a, b) => absK[a] - absK[b]);
  const xs = order.map((i) => absK[i]);
  const area = plotArea();
  const xScale = makeScale(xs.filter((v) => !style.logX || v > 0), area.x, style.logX);
  const yVals = [...eps, ...absOm, ...growth].filter((v) => !style.logY || v > 0);
  const yScale = makeScale(yVals, area.y, style.logY);

  const svg = new Svg("Bogoliubov dispersion");
  svg.axes(xScale, yScale, "|k|", "energy / rate");
  svg.polyline(xs, order.map((i) => eps[i]), xScale, yScale, { color: color(0) });
  svg.polyline(xs, order.map((i) => absOm[i]), xScale, yScale, { color: color(1), dash: true });
  svg.polyline(xs, order.map((i) => growth[i]), xScale, yScale, { color: color(2), width: 2 });
  svg.legend([
    { label: "eps_k", color: color(0) },
    { label: "|omega_k|", color: color(1), dash: true },
    { label: "growth rate", color: color(2) },
  ]);
  return svg.render();
}

function boundaryFigure(tables: Table[], axis: "alpha" | "lambda"): string {
  const table = tables[0];
  requireColumns(table, ["geometry", "alpha", "lambda", "L", "a_z_star_bogo", "a_z_star_dtwa"]);
  const xsAll = numberColumn(table, axis);
  const lVals = numberColumn(table, "L");
  const bogo = numberColumn(table, "a_z_star_bogo");
  const dtwa = numberColumn(table, "a_z_star_dtwa");
  const geometries = table.rows.map((r) => String(r.geometry));

  interface Row { x: number; bogo: number; dtwa: number; geometry: string }
  const rows: Row[] = xsAll.map((x, i) => ({
    x,
    bogo: bogo[i] / lVals[i],
    dtwa: dtwa[i] / lVals[i],
    geometry: geometries[i],
  }));

  const area = plotArea();
  const xScale = makeScale(rows.map((r) => r.x), area.x, false);
  const yFinite = rows.flatMap((r) => [r.bogo, r.dtwa]).filter(Number.isFinite);
  const yScale = makeScale([0, ...yFinite], area.y, false);

  const svg = new Svg(`Phase boundary vs ${axis}`);
  svg.axes(xScale, yScale, axis, "a_z*/L");
  const legend: { label: string; color: string; dash?: boolean }[] = [];
  let gi = 0;
  for (const [geometry, group] of groupBy(rows, (r) => r.geometry)) {
    group.sort((a, b) => a.x - b.x);
    const xs = group.map((r) => r.x);
    const c = color(gi);
    const finite = group.filter((r) => Number.isFinite(r.dtwa));
    // shaded region between the phases: partially collective below the
    // dTWA boundary, fully collective above
    if (finite.length >= 2) {
      svg.region(
        finite.map((r) => r.x),
        finite.map(() => yScale.domain[0]),
        finite.map((r) => r.dtwa),
        xScale,
        yScale,
        "#f4c2d7",
        0.35,
      );
      svg.region(
        finite.map((r) => r.x),
        finite.map((r) => r.dtwa),
        finite.map(() => yScale.domain[1]),
        xScale,
        yScale,
        "#c6dbf0",
        0.35,
      );
    }
    svg.polyline(xs, group.map((r) => r.bogo), xScale, yScale, { color: c, dash: true });
    svg.polyline(xs, group.map((r) => r.dtwa), xScale, yScale, { color: c, width: 2 });
    for (const r of group.filter((q) => Number.isFinite(q.bogo))) {
      svg.marker(r.x, r.bogo, xScale, yScale, c, 0.6);
    }
    for (const r of finite) svg.marker(r.x, r.dtwa, xScale, yScale, c);
    legend.push({ label: `${geometry} (Bogoliubov)`, color: c, dash: true });
    legend.push({ label: `${geometry} (dTWA)`, color: c });
    gi += 1;
  }
  svg.legend(legend);
  return svg.render();
}

function scalingFigure(tables: Table[], style: Style): string {
  const table = tables[0];
  requireColumns(table, ["alpha", "L", "a_z_star", "a_z_star_over_L"]);
  const alphas = numberColumn(table, "alpha");
  const lVals = numberColumn(table, "L");
  const ratio = numberColumn(table, "a_z_star_over_L");
  const rows = alphas.map((a, i) => ({ alpha: a, L: lVals[i], ratio: ratio[i] }));

  const area = plotArea();
  const xScale = makeScale(lVals, area.x, true);
  const yScale = makeScale(ratio, area.y, true);
  const svg = new Svg("Critical aspect ratio vs system size");
  svg.axes(xScale, yScale, "L", "a_z*/L");
  const legend: { label: string; color: string }[] = [];
  let gi = 0;
  for (const [alpha, group] of groupBy(rows, (r) => String(r.alpha))) {
    group.sort((a, b) => a.L - b.L);
    const c = color(gi);
    svg.polyline(group.map((r) => r.L), group.map((r) => r.ratio), xScale, yScale, { color: c });
    for (const r of group) svg.marker(r.L, r.ratio, xScale, yScale, c);
    legend.push({ label: `alpha = ${alpha}`, color: c });
    gi += 1;
  }
  svg.legend(legend);
  return svg.render();
  void style;
}

function collapseFigure(tables: Table[], style: Style): string {
  const table = tables[0];
  requireColumns(table, ["N", "a_z", "x", "y"]);
  const n = numberColumn(table, "N");
  const aZ = numberColumn(table, "a_z");
  const x = numberColumn(table, "x");
  const y = numberColumn(table, "y");
  const rows = n.map((nv, i) => ({ n: nv, aZ: aZ[i], x: x[i], y: y[i] }));

  const area = plotArea();
  const xScale = makeScale(x, area.x, style.logX);
  const yScale = makeScale(y, area.y, style.logY);
  const svg = new Svg("Scaling collapse of the squeezed variance");
  svg.axes(xScale, yScale, "rescaled time", "rescaled variance");

  const fade = fadeOpacities(aZ);
  const sizes = [...new Set(n)].sort((a, b) => a - b);
  const legend: { label: string; color: string; opacity?: number }[] = [];
  for (const [key, group] of groupBy(rows, (r) => `${r.n}|${r.aZ}`)) {
    const [nv, av] = key.split("|").map(Number);
    const c = color(sizes.indexOf(nv));
    group.sort((a, b) => a.x - b.x);
    svg.polyline(group.map((r) => r.x), group.map((r) => r.y), xScale, yScale, {
      color: c,
      opacity: fade.get(av) ?? 1,
    });
  }
  for (const nv of sizes) legend.push({ label: `N = ${nv}`, color: color(sizes.indexOf(nv)) });
  svg.legend(legend);
  return svg.render();
}

function rawSeriesFigure(tables: Table[], style: Style): string {
  interface Curve { aZ: number; t: number[]; v: number[]; label: string }
  const curves: Curve[] = tables.map((table, i) => {
    requireColumns(table, ["t", "var_O_minus"]);
    let aZ = i + 1;
    let label = `series ${i + 1}`;
    const manifestPath = join(dirname(table.path), "manifest.json");
    if (existsSync(manifestPath)) {
      const manifest = JSON.parse(readFileSync(manifestPath, "utf8"));
      if (manifest.spec && typeof manifest.spec.a_z === "number") {
        aZ = manifest.spec.a_z;
        label = `a_z = ${aZ}`;
      }
    }
    return { aZ, t: numberColumn(table, "t"), v: numberColumn(table, "var_O_minus"), label };
  });

  const area = plotArea();
  const xScale = makeScale(curves.flatMap((c) => c.t), area.x, style.logX);
  const yScale = makeScale(curves.flatMap((c) => c.v), area.y, style.logY);
  const svg = new Svg("Squeezed variance dynamics");
  svg.axes(xScale, yScale, "t", "Var[O-]");
  const fade = fadeOpacities(curves.map((c) => c.aZ));
  const legend = curves.map((c, i) => ({
    label: c.label,
    color: color(i),
    opacity: fade.get(c.aZ) ?? 1,
  }));
  curves.forEach((c, i) =>
    svg.polyline(c.t, c.v, xScale, yScale, { color: color(i), opacity: fade.get(c.aZ) ?? 1 }),
  );
  svg.legend(legend);
  return svg.render();
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

export function renderFigure(kind: Kind, paths: string[], style: Style): string {
  if (paths.length === 0) throw new SchemaError("no input files given");
  const tables = paths.map(loadCsv);
  switch (kind) {
    case "dispersion":
      return dispersionFigure(tables, { logX: style.logX, logY: style.logY });
    case "boundary_alpha":
      return boundaryFigure(tables, "alpha");
    case "boundary_lambda":
      return boundaryFigure(tables, "lambda");
    case "scaling":
      return scalingFigure(tables, style);
    case "collapse":
      return collapseFigure(tables, style);
    case "raw_series":
      return rawSeriesFigure(tables, { logX: style.logX, logY: true });
    default: {
      const never: never = kind;
      throw new SchemaError(`unknown figure kind ${String(never)}`);
    }
  }
}
