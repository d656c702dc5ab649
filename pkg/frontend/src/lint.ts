import { readFileSync } from "fs";
import { readReport, resolvePath } from "./io.js";
import { fmt } from "./svg.js";

export interface LintFinding {
  text: string;
  reason: string;
}

const TEXT_RE = /<text\b([^>]*)>([^<]*)<\/text>/g;
const ATTR_RE = /(\w[\w-]*)="([^"]*)"/g;

/**
 * Verify that every number rendered in a figure is traceable to an input
 * field: numeric text must be an axis tick, the provenance footer
 * (matching the report's hash), or a data-src-annotated copy of a report
 * field whose formatted value equals the rendered text.
 */
export function lintSvg(svgPath: string, reportPath: string): LintFinding[] {
  const svg = readFileSync(svgPath, "utf8");
  const report = readReport(reportPath);
  const findings: LintFinding[] = [];
  for (const m of svg.matchAll(TEXT_RE)) {
    const attrs: Record<string, string> = {};
    for (const a of m[1].matchAll(ATTR_RE)) attrs[a[1]] = a[2];
    const content = m[2];
    if (!/\d/.test(content)) continue;
    const cls = attrs["class"] ?? "";
    if (cls === "tick") continue;
    if (cls === "provenance") {
      const hash = content.replace("provenance", "").trim();
      if (hash !== report.provenance.config_hash) {
        findings.push({ text: content, reason: "provenance footer does not match the report" });
      }
      continue;
    }
    if (cls === "data") {
      const src = attrs["data-src"];
      if (!src) {
        findings.push({ text: content, reason: "data text without data-src" });
        continue;
      }
      const value = resolvePath(report, src);
      if (typeof value !== "number") {
        findings.push({ text: content, reason: `data-src ${src} not found in report` });
        continue;
      }
      if (fmt(value) !== content) {
        findings.push({
          text: content,
          reason: `rendered value differs from report field ${src} = ${fmt(value)}`,
        });
      }
      continue;
    }
    if (cls === "label" || cls === "title") {
      // prose may mention counts like "R^2" or color keys; only flag
      // standalone numbers
      if (/^[-+0-9.eE]+$/.test(content.trim())) {
        findings.push({ text: content, reason: `untraceable number in class ${cls}` });
      }
      continue;
    }
    findings.push({ text: content, reason: `numeric text with unknown class ${cls!}` });
  }
  return findings;
}
