import { readReport } from "./io.js";
import type { Report } from "./types.js";
import { fmt } from "./svg.js";

/** Headline metric per known report type; null marks an unknown type. */
function headline(rep: Report): string | null {
  const r = rep.results as Record<string, unknown>;
  switch (rep.report_type) {
    case "transport": {
      const rows = r.reports as Array<{ z_score: number }>;
      const zmax = Math.max(...rows.map((x) => x.z_score));
      return `max z = ${fmt(zmax)}`;
    }
    case "tail":
      return `slope = ${fmt(r.slope as number)}, R^2 = ${fmt(r.r_squared as number)}`;
    case "energy-convergence": {
      const rows = r.rows as Array<{ kinetic_ratio: number }>;
      return `kinetic ratio = ${fmt(rows[rows.length - 1].kinetic_ratio)}`;
    }
    case "growth":
      return `median exponent = ${fmt(r.exponent_median as number)}`;
    case "normal-form":
      return `max rel err = ${fmt(r.max_rel_error as number)}`;
    case "resonance": {
      const low = r.omega_lower_bound as { extremal_value: number };
      return `c_p = ${fmt(low.extremal_value)}`;
    }
    case "dyadic": {
      const dy = r.dyadic_scan as { slope: number };
      return `slope = ${fmt(dy.slope)}`;
    }
    case "conserve":
      return `drift E_N = ${fmt(r.drift_EN as number)}`;
    case "chaos":
      return `moment slope = ${fmt(r.slope as number)}`;
    case "selftest":
      return "smoke";
    default:
      return null;
  }
}

export interface SummaryResult {
  markdown: string;
  rowCount: number;
  skipped: string[];
}

/**
 * Markdown table over a set of report files, one row per report, with
 * pass/fail coloring from each report's own criteria.  Unknown report
 * types are skipped with a warning (forward compatibility), never an
 * error.
 */
export function summarize(paths: string[]): SummaryResult {
  const lines = [
    "| report | provenance | status | headline |",
    "| --- | --- | --- | --- |",
  ];
  const skipped: string[] = [];
  let rowCount = 0;
  for (const p of paths) {
    const rep = readReport(p);
    const head = headline(rep);
    if (head === null) {
      skipped.push(`${p}: unknown report type ${rep.report_type}`);
      continue;
    }
    const status =
      rep.passed === true ? "🟢 pass" : rep.passed === false ? "🔴 fail" : "⚪ report-only";
    lines.push(
      `| ${rep.report_type} | \`${rep.provenance.config_hash}\` | ${status} | ${head} |`,
    );
    rowCount += 1;
  }
  return { markdown: lines.join("\n") + "\n", rowCount, skipped };
}
