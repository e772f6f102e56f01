/**
 * CLI: render simulator CSV exports into SVG figures.
 *
 *   node dist/render.js --fig fig3 --in out/fig3.csv --out figs/fig3.svg
 *   node dist/render.js --all --in-dir out --out-dir figs
 *
 * Exit codes: 0 success, 1 any error (missing column, malformed CSV, bad
 * arguments).  Output files are written atomically: the SVG is fully built
 * in memory first, so a failure never leaves a partial file.
 */

import { mkdirSync, writeFileSync } from "fs";
import { dirname, join } from "path";

import { readCsv } from "./csv.js";
import { FIGURES, checkColumns, figureByName } from "./figures.js";

interface Args {
  fig?: string;
  in?: string;
  out?: string;
  all: boolean;
  inDir?: string;
  outDir?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { all: false };
  for (let k = 0; k < argv.length; k++) {
    const a = argv[k];
    const next = () => {
      if (k + 1 >= argv.length) throw new Error(`flag ${a} needs a value`);
      return argv[++k];
    };
    switch (a) {
      case "--fig":
        args.fig = next();
        break;
      case "--in":
        args.in = next();
        break;
      case "--out":
        args.out = next();
        break;
      case "--all":
        args.all = true;
        break;
      case "--in-dir":
        args.inDir = next();
        break;
      case "--out-dir":
        args.outDir = next();
        break;
      default:
        throw new Error(`unknown flag ${a}`);
    }
  }
  return args;
}

export function renderOne(figName: string, inPath: string, outPath: string): void {
  const fig = figureByName(figName);
  const table = readCsv(inPath);
  checkColumns(fig, table, inPath);
  const svg = fig.render(table, inPath);
  mkdirSync(dirname(outPath), { recursive: true });
  writeFileSync(outPath, svg, "utf-8");
}

export function renderAll(inDir: string, outDir: string): string[] {
  const written: string[] = [];
  for (const fig of FIGURES) {
    const outPath = join(outDir, `${fig.name}.svg`);
    renderOne(fig.name, join(inDir, fig.csvName), outPath);
    written.push(outPath);
  }
  return written;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
    if (args.all) {
      if (!args.inDir || !args.outDir) throw new Error("--all needs --in-dir and --out-dir");
      const written = renderAll(args.inDir, args.outDir);
      console.log(`wrote ${written.length} figures to ${args.outDir}`);
      return 0;
    }
    if (!args.fig || !args.in || !args.out) {
      throw new Error("need --fig NAME --in CSV --out SVG (or --all --in-dir D --out-dir D)");
    }
    renderOne(args.fig, args.in, args.out);
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    console.error(`render error: ${(err as Error).message}`);
    return 1;
  }
}

import { fileURLToPath } from "url";

if (process.argv[1] && fileURLToPath(import.meta.url) === process.argv[1]) {
  process.exit(main(process.argv.slice(2)));
}
