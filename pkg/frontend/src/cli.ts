/**
 * Figure renderer for balpha CSV artifacts.
 *
 * Usage:
 *   node dist/cli.js --kind tau-law --input tau_sweep.csv --out fig.svg
 *
 * For the fitting kinds (tau-law, refinement) a `<out>.fit.json` sidecar
 * is written next to the SVG (override with --fit-out).
 */

import { readFile, writeFile } from "fs/promises";

import { SchemaError } from "./csv.js";
import { fitToJson } from "./fit.js";
import { FigureKind, render } from "./figures.js";

const KINDS: FigureKind[] = [
  "uniformity",
  "tau-law",
  "refinement",
  "smoothing",
  "alpha-limit",
];

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new SchemaError(`malformed arguments near '${key}'`);
    }
    out[key.slice(2)] = argv[i + 1];
  }
  return out;
}

async function main(): Promise<number> {
  let args: Record<string, string>;
  try {
    args = parseArgs(process.argv.slice(2));
    if (!args.kind || !args.input || !args.out) {
      throw new SchemaError("required: --kind <kind> --input <csv> --out <svg>");
    }
    if (!KINDS.includes(args.kind as FigureKind)) {
      throw new SchemaError(
        `unknown figure kind '${args.kind}'; expected one of ${KINDS.join(", ")}`,
      );
    }
  } catch (e) {
    console.error(String(e instanceof Error ? e.message : e));
    return 2;
  }
  try {
    const text = await readFile(args.input, "utf-8");
    const result = render(args.kind as FigureKind, text);
    await writeFile(args.out, result.svg);
    if (result.fit) {
      const sidecar = args["fit-out"] ?? args.out.replace(/\.svg$/, "") + ".fit.json";
      await writeFile(sidecar, fitToJson(result.fit));
      console.log(`wrote ${args.out} and ${sidecar} (slope ${result.fit.slope})`);
    } else {
      console.log(`wrote ${args.out}`);
    }
    return 0;
  } catch (e) {
    console.error(String(e instanceof Error ? e.message : e));
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
