/**
 * CSV reading for the simulator's figure exports.
 *
 * The upstream contract: one header row naming the columns, one row per
 * sample, floats with up to 9 significant digits, absent diagnostics left as
 * empty fields (parsed here as NaN).
 */

import { readFileSync } from "fs";

export interface Table {
  /** column name -> column index */
  columns: Map<string, number>;
  /** row-major numeric data; absent fields are NaN */
  rows: number[][];
}

export class CsvError extends Error {}

export function parseCsv(text: string, source: string): Table {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new CsvError(`${source}: empty CSV`);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  if (header.some((h) => h.length === 0)) {
    throw new CsvError(`${source}: header has an unnamed column`);
  }
  const columns = new Map<string, number>();
  header.forEach((name, idx) => {
    if (columns.has(name)) {
      throw new CsvError(`${source}: duplicate column '${name}'`);
    }
    columns.set(name, idx);
  });
  if (lines.length === 1) {
    throw new CsvError(`${source}: no data rows`);
  }
  const rows: number[][] = [];
  for (let k = 1; k < lines.length; k++) {
    const parts = lines[k].split(",");
    if (parts.length !== header.length) {
      throw new CsvError(
        `${source}: row ${k} has ${parts.length} fields, expected ${header.length}`,
      );
    }
    rows.push(
      parts.map((p) => {
        const t = p.trim();
        if (t === "") return NaN;
        const v = Number(t);
        if (Number.isNaN(v)) {
          throw new CsvError(`${source}: row ${k} has a non-numeric field '${t}'`);
        }
        return v;
      }),
    );
  }
  return { columns, rows };
}

export function readCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new CsvError(`cannot read ${path}: ${(err as Error).message}`);
  }
  return parseCsv(text, path);
}

/** Extract a named column, failing with the column name when absent. */
export function column(table: Table, name: string, source: string): number[] {
  const idx = table.columns.get(name);
  if (idx === undefined) {
    const have = [...table.columns.keys()].join(", ");
    throw new CsvError(`${source}: missing column '${name}' (available: ${have})`);
  }
  return table.rows.map((r) => r[idx]);
}
