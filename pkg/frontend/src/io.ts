import { readFileSync } from "fs";
import type { CsvTable, Report } from "./types.js";

export function readReport(path: string): Report {
  const doc = JSON.parse(readFileSync(path, "utf8")) as Report;
  if (!doc.report_type || !doc.provenance || !doc.provenance.config_hash) {
    throw new Error(`${path}: not a gnlslab report (missing provenance)`);
  }
  return doc;
}

/** CSV with an optional leading "# provenance: <hash>" comment line. */
export function readCsv(path: string): CsvTable {
  const lines = readFileSync(path, "utf8").split("\n").filter((l) => l.length > 0);
  let provenanceHash: string | null = null;
  let start = 0;
  if (lines[0]?.startsWith("# provenance:")) {
    provenanceHash = lines[0].split(":")[1].trim();
    start = 1;
  }
  if (lines.length <= start) throw new Error(`${path}: empty CSV`);
  const header = lines[start].split(",");
  const raw = lines.slice(start + 1).map((l) => l.split(","));
  const rows = raw.map((cells) => cells.map((c) => Number(c)));
  if (rows.length === 0) throw new Error(`${path}: no data rows`);
  return { provenanceHash, header, rows, raw };
}

export interface LoadedInputs {
  report: Report;
  csvs: CsvTable[];
  hash: string;
}

/**
 * Load a report plus sidecar CSVs and enforce that every input carries the
 * same provenance hash; mixing artifacts from different runs is a hard
 * error.
 */
export function loadInputs(paths: string[]): LoadedInputs {
  if (paths.length === 0) throw new Error("no inputs given");
  const jsonPaths = paths.filter((p) => p.endsWith(".json"));
  const csvPaths = paths.filter((p) => p.endsWith(".csv"));
  if (jsonPaths.length !== 1) {
    throw new Error(`expected exactly one report JSON, got ${jsonPaths.length}`);
  }
  const report = readReport(jsonPaths[0]);
  const hash = report.provenance.config_hash;
  const csvs = csvPaths.map((p) => {
    const t = readCsv(p);
    if (t.provenanceHash !== null && t.provenanceHash !== hash) {
      throw new Error(
        `provenance mismatch: ${p} carries ${t.provenanceHash}, report carries ${hash}`,
      );
    }
    return t;
  });
  return { report, csvs, hash };
}

/** Resolve a dotted path ("results.slope" or "results.rows.2.N") in a report. */
export function resolvePath(doc: unknown, path: string): unknown {
  let cur: unknown = doc;
  for (const part of path.split(".")) {
    if (cur === null || typeof cur !== "object") return undefined;
    cur = (cur as Record<string, unknown>)[part];
  }
  return cur;
}
