import { writeFileSync } from "fs";
import { loadInputs, type LoadedInputs } from "./io.js";
import type { Histogram, PlotSpec, TransportRow } from "./types.js";
import { Svg, fmt, makeScale, plotArea } from "./svg.js";

/**
 * Render one figure.  Every number that appears as text is either an axis
 * tick, the provenance hash, or a field copied verbatim from the report
 * (annotated with data-src and enforced by lint.ts); fitted lines are
 * drawn from the slopes and intercepts the pipeline reported, never
 * refitted here.
 */
export function render(spec: PlotSpec): string {
  const inputs = loadInputs(spec.inputs);
  let svg: Svg;
  switch (spec.kind) {
    case "growth-curves":
      svg = growthCurves(inputs);
      break;
    case "tail-fit":
      svg = tailFit(inputs);
      break;
    case "convergence-loglog":
      svg = convergenceLogLog(inputs);
      break;
    case "transport-zscores":
      svg = transportZScores(inputs);
      break;
    case "density-histogram":
      svg = densityHistogram(inputs);
      break;
    default:
      throw new Error(`unknown plot kind ${String(spec.kind)}`);
  }
  if (spec.caption) svg.text(320, 32, spec.caption, "label");
  svg.provenanceFooter(inputs.hash);
  const out = svg.render();
  writeFileSync(spec.output, out);
  return out;
}

function expectType(inputs: LoadedInputs, type: string) {
  if (inputs.report.report_type !== type) {
    throw new Error(
      `plot kind needs a ${type} report, got ${inputs.report.report_type}`,
    );
  }
}

function growthCurves(inputs: LoadedInputs): Svg {
  expectType(inputs, "growth");
  const csv = inputs.csvs.find((c) => c.header.includes("sup_norm"));
  if (!csv) throw new Error("growth-curves needs growth_curves.csv");
  const area = plotArea();
  const iS = csv.header.indexOf("sample_index");
  const iT = csv.header.indexOf("T");
  const iN = csv.header.indexOf("sup_norm");
  const ts = csv.rows.map((r) => 1 + r[iT]);
  const ns = csv.rows.map((r) => r[iN]);
  const xs = makeScale([Math.min(...ts) * 0.95, Math.max(...ts) * 1.05], area.x, true);
  const ys = makeScale([Math.min(...ns) * 0.9, Math.max(...ns) * 1.1], area.y, true);
  const svg = new Svg();
  svg.title("Sobolev norm growth: per-sample running sup against 1+T");
  svg.axes(xs, ys, "1 + T", "sup ||u(t)||");
  const bySample = new Map<number, Array<[number, number]>>();
  for (const r of csv.rows) {
    const k = r[iS];
    if (!bySample.has(k)) bySample.set(k, []);
    bySample.get(k)!.push([xs(1 + r[iT]), ys(r[iN])]);
  }
  for (const pts of bySample.values()) svg.polyline(pts, "#1f77b4", 1, 0.55);
  svg.datum(
    plotArea().x[0] + 8,
    plotArea().y[1] + 14,
    "median fitted exponent:",
    inputs.report.results.exponent_median as number,
    "results.exponent_median",
  );
  return svg;
}

function tailFit(inputs: LoadedInputs): Svg {
  expectType(inputs, "tail");
  const res = inputs.report.results as {
    M_grid: number[];
    log_probabilities: number[];
    censored: boolean[];
    slope: number;
    intercept: number;
    r_squared: number;
  };
  const pts: Array<[number, number]> = [];
  res.M_grid.forEach((m, i) => {
    if (!res.censored[i]) pts.push([m * m, res.log_probabilities[i]]);
  });
  if (pts.length === 0) throw new Error("tail report has no uncensored points");
  const area = plotArea();
  const xsDom: [number, number] = [0, Math.max(...pts.map((p) => p[0])) * 1.08];
  const ysVals = pts.map((p) => p[1]);
  const ysDom: [number, number] = [Math.min(...ysVals) * 1.15, 0];
  const xs = makeScale(xsDom, area.x);
  const ys = makeScale(ysDom, area.y);
  const svg = new Svg();
  svg.title("Flow tail: log P(sup norm > M) against M^2, reported fit");
  svg.axes(xs, ys, "M^2", "log P");
  // fitted line re-read from the report, never refitted
  const yAt = (x: number) => res.slope * x + res.intercept;
  svg.polyline(
    [
      [xs(xsDom[0]), ys(Math.max(ysDom[0], Math.min(0, yAt(xsDom[0]))))],
      [xs(xsDom[1]), ys(Math.max(ysDom[0], Math.min(0, yAt(xsDom[1]))))],
    ],
    "#d62728",
    1.5,
  );
  for (const [x, y] of pts) svg.circle(xs(x), ys(y));
  svg.datum(area.x[0] + 8, area.y[1] + 14, "slope:", res.slope, "results.slope");
  svg.datum(area.x[0] + 8, area.y[1] + 30, "R^2:", res.r_squared, "results.r_squared");
  return svg;
}

function convergenceLogLog(inputs: LoadedInputs): Svg {
  expectType(inputs, "energy-convergence");
  const rows = inputs.report.results.rows as Array<{
    N: number;
    distance_Lq: number;
    kinetic_oracle: number;
    kinetic_L2: number;
  }>;
  const usable = rows.filter((r) => r.distance_Lq > 0);
  if (usable.length === 0) throw new Error("no positive distances to plot");
  const area = plotArea();
  const allY = usable.flatMap((r) => [r.distance_Lq, r.kinetic_oracle, r.kinetic_L2]);
  const xs = makeScale(
    [Math.min(...usable.map((r) => r.N)) * 0.8, Math.max(...usable.map((r) => r.N)) * 1.2],
    area.x,
    true,
  );
  const ys = makeScale([Math.min(...allY) * 0.8, Math.max(...allY) * 1.25], area.y, true);
  const svg = new Svg();
  svg.title("Renormalized-energy convergence: distance to the reference truncation");
  svg.axes(xs, ys, "N", "L^q distance");
  svg.polyline(usable.map((r) => [xs(r.N), ys(r.kinetic_oracle)]), "#d62728", 1.5);
  for (const r of usable) {
    svg.circle(xs(r.N), ys(r.distance_Lq), 4, "#1f77b4");
    svg.circle(xs(r.N), ys(r.kinetic_L2), 3, "#2ca02c");
  }
  const q = (inputs.report.results as { q: number }).q;
  svg.datum(area.x[0] + 8, area.y[1] + 14, "q:", q, "results.q");
  svg.text(area.x[0] + 8, area.y[1] + 30, "red: chi-square oracle (kinetic part)", "label", { anchor: "start" });
  return svg;
}

function transportZScores(inputs: LoadedInputs): Svg {
  expectType(inputs, "transport");
  const rows = inputs.report.results.reports as TransportRow[];
  if (!rows || rows.length === 0) throw new Error("transport report has no rows");
  const area = plotArea();
  const xs = makeScale([-0.5, rows.length - 0.5], area.x);
  const zmax = Math.max(5, ...rows.map((r) => r.z_score));
  const ys = makeScale([0, zmax * 1.1], area.y);
  const svg = new Svg();
  svg.title("Transport identity z-scores by configuration");
  svg.axes(xs, ys, "configuration", "z", rows.map((_, i) => i));
  const soft = inputs.report.criteria.z_soft as number | undefined;
  const hard = inputs.report.criteria.z_hard as number | undefined;
  if (typeof soft === "number") {
    svg.line(area.x[0], ys(soft), area.x[1], ys(soft), "#d62728", "4 3");
    svg.datum(area.x[1] - 90, ys(soft) - 5, "soft gate:", soft, "criteria.z_soft");
  }
  if (typeof hard === "number") {
    svg.line(area.x[0], ys(hard), area.x[1], ys(hard), "#7f0000", "4 3");
    svg.datum(area.x[1] - 90, ys(hard) - 5, "hard gate:", hard, "criteria.z_hard");
  }
  rows.forEach((r, i) => {
    const color = r.mode === "plain" ? "#1f77b4" : r.mode === "cutoff" ? "#2ca02c" : "#9467bd";
    svg.circle(xs(i), ys(r.z_score), 4, color);
  });
  svg.text(area.x[0] + 8, area.y[1] + 14,
           "blue plain, green cutoff, purple weighted; x = report row", "label",
           { anchor: "start" });
  return svg;
}

function densityHistogram(inputs: LoadedInputs): Svg {
  expectType(inputs, "transport");
  const hist = inputs.report.results.density_histogram as Histogram | null;
  if (!hist || hist.counts.length === 0) {
    throw new Error("transport report carries no density histogram");
  }
  const area = plotArea();
  const xs = makeScale([hist.edges[0], hist.edges[hist.edges.length - 1]], area.x);
  const ymax = Math.max(...hist.counts);
  const ys = makeScale([0, ymax * 1.1], area.y);
  const svg = new Svg();
  svg.title(`Histogram of ${hist.quantity} (binned by the pipeline)`);
  svg.axes(xs, ys, hist.quantity, "count");
  hist.counts.forEach((c, i) => {
    const x0 = xs(hist.edges[i]);
    const x1 = xs(hist.edges[i + 1]);
    svg.rect(x0, ys(c), Math.max(x1 - x0 - 0.5, 0.5), ys(0) - ys(c));
  });
  return svg;
}
