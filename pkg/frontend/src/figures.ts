/**
 * Figure specifications over the simulator's exported CSV sets.
 *
 * Each spec names its input CSV, the columns it consumes, axis labels, and
 * the benchmark event times drawn as vertical markers.
 */

import { Table, column } from "./csv.js";
import { ChartSpec, renderChart, stackCharts } from "./svg.js";

export const EVENT_TIMES = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4];

export interface FigureSpec {
  name: string;
  csvName: string;
  /** all columns that must be present in the input */
  columns: string[];
  render: (table: Table, source: string) => string;
}

const PALETTE = {
  blue: "#1f5fa8",
  orange: "#d95f02",
  green: "#1b7837",
  purple: "#762a83",
};

function lineChart(
  table: Table,
  source: string,
  title: string,
  yLabel: string,
  series: { col: string; label: string; color: string; dash?: string }[],
  height = 300,
): string {
  const t = column(table, "t", source);
  const spec: ChartSpec = {
    title,
    xLabel: "time [s]",
    yLabel,
    eventMarkers: EVENT_TIMES,
    height,
    series: series.map((s) => ({
      label: s.label,
      color: s.color,
      dash: s.dash,
      x: t,
      y: column(table, s.col, source),
    })),
  };
  return renderChart(spec);
}

export const FIGURES: FigureSpec[] = [
  {
    name: "fig2",
    csvName: "fig2.csv",
    columns: ["t", "v", "i", "i_hat", "g_hat", "pf"],
    render: (table, source) =>
      stackCharts([
        lineChart(table, source, "Start-up: output voltage", "v [V]", [
          { col: "v", label: "v", color: PALETTE.blue },
        ], 240),
        lineChart(table, source, "Start-up: input current and estimate", "i [A]", [
          { col: "i", label: "i", color: PALETTE.blue },
          { col: "i_hat", label: "i estimate", color: PALETTE.orange, dash: "5 3" },
        ], 240),
        lineChart(table, source, "Start-up: conductance estimate", "G estimate [S]", [
          { col: "g_hat", label: "G estimate", color: PALETTE.green },
        ], 240),
        lineChart(table, source, "Start-up: power factor", "PF", [
          { col: "pf", label: "PF", color: PALETTE.purple },
        ], 240),
      ]),
  },
  {
    name: "fig3",
    csvName: "fig3.csv",
    columns: ["t", "v"],
    render: (table, source) =>
      lineChart(table, source, "Output voltage under parameter steps", "v [V]", [
        { col: "v", label: "v", color: PALETTE.blue },
      ]),
  },
  {
    name: "fig4",
    csvName: "fig4.csv",
    columns: ["t", "v_i", "i", "i_hat"],
    render: (table, source) =>
      lineChart(table, source, "Input current and its estimate", "i [A] / v_i [V]", [
        { col: "i", label: "i", color: PALETTE.blue },
        { col: "i_hat", label: "i estimate", color: PALETTE.orange, dash: "5 3" },
      ]),
  },
  {
    name: "fig5",
    csvName: "fig5.csv",
    columns: ["t", "g_hat"],
    render: (table, source) =>
      lineChart(table, source, "Conductance estimate under parameter steps", "G estimate [S]", [
        { col: "g_hat", label: "G estimate", color: PALETTE.green },
      ]),
  },
  {
    name: "fig6",
    csvName: "fig6.csv",
    columns: ["t", "pf"],
    render: (table, source) =>
      lineChart(table, source, "Power factor under parameter steps", "PF", [
        { col: "pf", label: "PF", color: PALETTE.purple },
      ]),
  },
];

export function figureByName(name: string): FigureSpec {
  const fig = FIGURES.find((f) => f.name === name);
  if (!fig) {
    throw new Error(`unknown figure '${name}' (expected one of ${FIGURES.map((f) => f.name).join(", ")})`);
  }
  return fig;
}

/** Validate required columns up front so errors carry the column name. */
export function checkColumns(fig: FigureSpec, table: Table, source: string): void {
  for (const name of fig.columns) {
    column(table, name, source);
  }
}
