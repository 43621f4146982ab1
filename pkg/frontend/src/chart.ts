/** Line-chart data preparation and a dependency-free SVG renderer. */

export type Point = [number, number];

/** Sanitize a series for rendering: sort by time, drop duplicate-x
 * points, and cap the count at twice the requested downsample target
 * (the server's min-max buckets return at most 2x target). */
export function prepareSeries(points: Point[], target: number): Point[] {
  const sorted = [...points].sort((a, b) => a[0] - b[0]);
  const out: Point[] = [];
  for (const p of sorted) {
    if (out.length === 0 || p[0] > out[out.length - 1][0]) out.push(p);
  }
  const cap = Math.max(2, 2 * target);
  if (out.length <= cap) return out;
  const step = out.length / cap;
  const capped: Point[] = [];
  for (let i = 0; i < cap; i++) capped.push(out[Math.floor(i * step)]);
  return capped;
}

export interface ChartLayout {
  width: number;
  height: number;
  path: string;
  xLabels: { x: number; text: string }[];
  yLabels: { y: number; text: string }[];
}

export function layoutChart(points: Point[], width: number, height: number): ChartLayout {
  const pad = 36;
  if (points.length === 0) {
    return { width, height, path: "", xLabels: [], yLabels: [] };
  }
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const x0 = xs[0];
  const x1 = xs[xs.length - 1] || x0 + 1;
  let yMin = Math.min(...ys);
  let yMax = Math.max(...ys);
  if (yMin === yMax) {
    yMin -= 1;
    yMax += 1;
  }
  const sx = (x: number) => pad + ((x - x0) / (x1 - x0 || 1)) * (width - 2 * pad);
  const sy = (y: number) => height - pad - ((y - yMin) / (yMax - yMin)) * (height - 2 * pad);
  const path = points
    .map((p, i) => `${i === 0 ? "M" : "L"}${sx(p[0]).toFixed(1)},${sy(p[1]).toFixed(1)}`)
    .join(" ");
  const xLabels = [x0, (x0 + x1) / 2, x1].map((x) => ({
    x: sx(x),
    text: `${((x - x0) / 1000).toFixed(0)}s`,
  }));
  const yLabels = [yMin, (yMin + yMax) / 2, yMax].map((y) => ({
    y: sy(y),
    text: y.toPrecision(3),
  }));
  return { width, height, path, xLabels, yLabels };
}

export function renderChartSvg(doc: Document, points: Point[], width: number, height: number): SVGSVGElement {
  const ns = "http://www.w3.org/2000/svg";
  const layout = layoutChart(points, width, height);
  const svg = doc.createElementNS(ns, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "chart");
  const path = doc.createElementNS(ns, "path");
  path.setAttribute("d", layout.path);
  path.setAttribute("fill", "none");
  path.setAttribute("stroke", "#2563eb");
  path.setAttribute("stroke-width", "1.5");
  svg.appendChild(path);
  for (const label of layout.xLabels) {
    const t = doc.createElementNS(ns, "text");
    t.setAttribute("x", String(label.x));
    t.setAttribute("y", String(height - 8));
    t.setAttribute("class", "chart-label");
    t.textContent = label.text;
    svg.appendChild(t);
  }
  for (const label of layout.yLabels) {
    const t = doc.createElementNS(ns, "text");
    t.setAttribute("x", "4");
    t.setAttribute("y", String(label.y));
    t.setAttribute("class", "chart-label");
    t.textContent = label.text;
    svg.appendChild(t);
  }
  return svg;
}
