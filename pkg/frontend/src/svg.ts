/**
 * Minimal standalone SVG line charts — no DOM, no plotting library.
 *
 * One chart = one or more series over a shared time axis, optional vertical
 * event markers, axes with round-number ticks, and a legend.
 */

export interface Series {
  label: string;
  color: string;
  x: number[];
  y: number[];
  dash?: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  eventMarkers?: number[];
  width?: number;
  height?: number;
}

const MARGIN = { top: 34, right: 16, bottom: 42, left: 64 };

function finiteExtent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (lo > hi) throw new Error("series has no finite samples");
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  return [lo, hi];
}

function niceTicks(lo: number, hi: number, n = 6): number[] {
  const span = hi - lo;
  const raw = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 10 : norm >= 2 ? 5 : norm >= 1 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) ticks.push(v);
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return Number(v.toPrecision(6)).toString();
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(spec: ChartSpec): string {
  const width = spec.width ?? 760;
  const height = spec.height ?? 300;
  if (spec.series.length === 0) throw new Error(`${spec.title}: no series to draw`);
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const [x0, x1] = finiteExtent(spec.series.flatMap((s) => s.x));
  const [yLoRaw, yHiRaw] = finiteExtent(spec.series.flatMap((s) => s.y));
  const pad = 0.06 * (yHiRaw - yLoRaw);
  const y0 = yLoRaw - pad;
  const y1 = yHiRaw + pad;

  const sx = (x: number) => MARGIN.left + ((x - x0) / (x1 - x0)) * plotW;
  const sy = (y: number) => MARGIN.top + (1 - (y - y0) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="18" text-anchor="middle" font-size="13">${esc(spec.title)}</text>`,
  );

  // axes and grid
  for (const tx of niceTicks(x0, x1)) {
    const px = sx(tx);
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + plotH}" stroke="#eee"/>`,
      `<text x="${px}" y="${MARGIN.top + plotH + 16}" text-anchor="middle">${fmt(tx)}</text>`,
    );
  }
  for (const ty of niceTicks(y0, y1)) {
    const py = sy(ty);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + plotW}" y2="${py}" stroke="#eee"/>`,
      `<text x="${MARGIN.left - 6}" y="${py + 4}" text-anchor="end">${fmt(ty)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#444"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 8}" text-anchor="middle">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">${esc(spec.yLabel)}</text>`,
  );

  // event markers, clipped to the x-range
  for (const ev of spec.eventMarkers ?? []) {
    if (ev < x0 || ev > x1) continue;
    const px = sx(ev);
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + plotH}" stroke="#b40000" stroke-dasharray="4 3" stroke-width="1" class="event-marker"/>`,
    );
  }

  // series polylines, split at non-finite gaps
  for (const s of spec.series) {
    if (s.x.length !== s.y.length) throw new Error(`${spec.title}: series '${s.label}' length mismatch`);
    let d = "";
    let pen = false;
    for (let k = 0; k < s.x.length; k++) {
      if (!Number.isFinite(s.y[k]) || !Number.isFinite(s.x[k])) {
        pen = false;
        continue;
      }
      d += `${pen ? "L" : "M"}${sx(s.x[k]).toFixed(2)} ${sy(s.y[k]).toFixed(2)}`;
      pen = true;
    }
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(`<path d="${d}" fill="none" stroke="${s.color}" stroke-width="1.3"${dash}/>`);
  }

  // legend
  let lx = MARGIN.left + 8;
  for (const s of spec.series) {
    const ly = MARGIN.top + 12;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 18}" y2="${ly - 4}" stroke="${s.color}" stroke-width="2"${s.dash ? ` stroke-dasharray="${s.dash}"` : ""}/>`,
      `<text x="${lx + 22}" y="${ly}">${esc(s.label)}</text>`,
    );
    lx += 30 + 7 * s.label.length;
  }

  parts.push("</svg>");
  return parts.join("\n");
}

/** Stack several charts vertically into one SVG document. */
export function stackCharts(charts: string[], width = 760): string {
  let y = 0;
  const inner: string[] = [];
  for (const c of charts) {
    const m = c.match(/height="(\d+)"/);
    const h = m ? Number(m[1]) : 300;
    inner.push(`<g transform="translate(0 ${y})">${c}</g>`);
    y += h;
  }
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${y}" viewBox="0 0 ${width} ${y}">\n${inner.join("\n")}\n</svg>`;
}
