#!/usr/bin/env node
/**
 * gnlslab-report: offline figures and summaries from gnlslab outputs.
 *
 *   render  --kind <kind> --input a.json[,b.csv,...] --out fig.svg [--caption t]
 *   summary --inputs a.json,b.json,... --out summary.md
 *   lint    --svg fig.svg --input a.json
 *
 * Exit codes: 0 ok, 1 hard error (missing/mismatched inputs, lint
 * findings).  Unknown report types in `summary` are skipped with a
 * warning and do not fail the run.
 */

import { writeFileSync } from "fs";
import { render } from "./render.js";
import { summarize } from "./summary.js";
import { lintSvg } from "./lint.js";
import type { PlotKind } from "./types.js";

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const k = argv[i];
    if (!k.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${k}`);
    }
    out[k.slice(2)] = argv[i + 1];
  }
  return out;
}

function need(args: Record<string, string>, key: string): string {
  const v = args[key];
  if (!v) throw new Error(`missing --${key}`);
  return v;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    const args = parseArgs(rest);
    if (command === "render") {
      render({
        kind: need(args, "kind") as PlotKind,
        inputs: need(args, "input").split(","),
        output: need(args, "out"),
        caption: args["caption"],
      });
      return 0;
    }
    if (command === "summary") {
      const res = summarize(need(args, "inputs").split(","));
      for (const warn of res.skipped) console.warn(`warning: skipped ${warn}`);
      writeFileSync(need(args, "out"), res.markdown);
      console.log(`${res.rowCount} report rows written`);
      return 0;
    }
    if (command === "lint") {
      const findings = lintSvg(need(args, "svg"), need(args, "input"));
      for (const f of findings) console.error(`lint: "${f.text}": ${f.reason}`);
      return findings.length === 0 ? 0 : 1;
    }
    console.error(`unknown command ${command ?? "(none)"}`);
    return 1;
  } catch (exc) {
    console.error(String(exc instanceof Error ? exc.message : exc));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
