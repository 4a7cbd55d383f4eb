/**
 * Dependency-free SVG charts rendered straight from server metrics.
 *
 * Every mark carries its exact serialized numbers in data attributes
 * (JavaScript number-to-string is a shortest round-trip), so anything the
 * chart displays can be audited against the API payload verbatim.
 */
import type { IterationRow } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const COLORS = {
  anomalous: "#d97706",
  uncertain: "#2563eb",
  random: "#9ca3af",
  curve: "#111827",
  baseline: "#dc2626",
  axis: "#6b7280",
} as const;

interface Size {
  width?: number;
  height?: number;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const el = doc.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

function frame(doc: Document, width: number, height: number, label: string): SVGSVGElement {
  const svg = svgEl(doc, "svg", {
    viewBox: `0 0 ${width} ${height}`,
    role: "img",
    "aria-label": label,
  });
  svg.style.maxWidth = "100%";
  return svg;
}

function yAxis(doc: Document, svg: SVGSVGElement, left: number, top: number, plotH: number, right: number): void {
  for (const frac of [0, 0.5, 1]) {
    const y = top + plotH * (1 - frac);
    svg.appendChild(
      svgEl(doc, "line", {
        x1: String(left), x2: String(right), y1: String(y), y2: String(y),
        stroke: COLORS.axis, "stroke-width": "0.5", "stroke-dasharray": frac === 0 ? "" : "2 3",
      }),
    );
    const tick = svgEl(doc, "text", {
      x: String(left - 4), y: String(y + 3), "text-anchor": "end",
      "font-size": "9", fill: COLORS.axis,
    });
    tick.textContent = frac.toString();
    svg.appendChild(tick);
  }
}

/** Rounds that actually completed a batch and carry fraction values. */
export function fractionRows(rows: IterationRow[]): IterationRow[] {
  return rows.filter(
    (r) =>
      r.batch_size !== null &&
      r.alpha_anomalous !== null &&
      r.alpha_uncertain !== null &&
      r.alpha_random !== null,
  );
}

/**
 * Stacked per-round bars of the query mix: anomalous at the base, uncertain
 * above it, random on top.  One <g class="fraction-update"> per completed
 * round with the exact alphas in data-anomalous/-uncertain/-random.
 */
export function fractionChart(doc: Document, rows: IterationRow[], size: Size = {}): SVGSVGElement {
  const width = size.width ?? 440;
  const height = size.height ?? 170;
  const pad = { left: 30, right: 10, top: 10, bottom: 24 };
  const plotW = width - pad.left - pad.right;
  const plotH = height - pad.top - pad.bottom;
  const svg = frame(doc, width, height, "query fractions per round");
  svg.classList.add("fraction-chart");
  yAxis(doc, svg, pad.left, pad.top, plotH, width - pad.right);

  const updates = fractionRows(rows);
  const slot = plotW / Math.max(updates.length, 1);
  const barW = Math.min(slot * 0.6, 48);

  updates.forEach((row, i) => {
    const group = svgEl(doc, "g", {
      class: "fraction-update",
      "data-t": String(row.t),
      "data-anomalous": String(row.alpha_anomalous),
      "data-uncertain": String(row.alpha_uncertain),
      "data-random": String(row.alpha_random),
    });
    const x = pad.left + slot * i + (slot - barW) / 2;
    let yCursor = pad.top + plotH;
    const parts: Array<[keyof typeof COLORS, number]> = [
      ["anomalous", row.alpha_anomalous as number],
      ["uncertain", row.alpha_uncertain as number],
      ["random", row.alpha_random as number],
    ];
    for (const [name, alpha] of parts) {
      const h = plotH * alpha;
      yCursor -= h;
      group.appendChild(
        svgEl(doc, "rect", {
          class: `fraction-${name}`,
          x: String(x), y: String(yCursor),
          width: String(barW), height: String(h),
          fill: COLORS[name],
        }),
      );
    }
    const tick = svgEl(doc, "text", {
      x: String(x + barW / 2), y: String(height - 8),
      "text-anchor": "middle", "font-size": "9", fill: COLORS.axis,
    });
    tick.textContent = `t=${row.t}`;
    group.appendChild(tick);
    svg.appendChild(group);
  });
  return svg;
}

export interface CurvePoint {
  t: number;
  f1: number;
}

/** Completed-round F1 points, plus the closing evaluation when present. */
export function curvePoints(
  rows: IterationRow[],
  current: { t: number; f1: number | null; status: string } | null,
): CurvePoint[] {
  const pts: CurvePoint[] = rows
    .filter((r) => r.f1 !== null)
    .map((r) => ({ t: r.t, f1: r.f1 as number }));
  if (current && current.status === "finished" && current.f1 !== null) {
    pts.push({ t: current.t, f1: current.f1 });
  }
  return pts;
}

/**
 * Evaluation F1 per round as a polyline with one
 * <circle class="curve-point"> per value (exact F1 in data-f1), plus a
 * dashed baseline rule when a baseline is supplied.
 */
export function learningCurveChart(
  doc: Document,
  rows: IterationRow[],
  baseline: number | null,
  current: { t: number; f1: number | null; status: string } | null,
  size: Size = {},
): SVGSVGElement {
  const width = size.width ?? 440;
  const height = size.height ?? 170;
  const pad = { left: 30, right: 10, top: 10, bottom: 24 };
  const plotW = width - pad.left - pad.right;
  const plotH = height - pad.top - pad.bottom;
  const svg = frame(doc, width, height, "evaluation F1 per round");
  svg.classList.add("curve-chart");
  yAxis(doc, svg, pad.left, pad.top, plotH, width - pad.right);

  const pts = curvePoints(rows, current);
  const tMax = Math.max(1, ...pts.map((p) => p.t));
  const toX = (t: number) => pad.left + (plotW * t) / tMax;
  const toY = (v: number) => pad.top + plotH * (1 - v);

  if (baseline !== null) {
    svg.appendChild(
      svgEl(doc, "line", {
        class: "curve-baseline",
        "data-baseline": String(baseline),
        x1: String(pad.left), x2: String(width - pad.right),
        y1: String(toY(baseline)), y2: String(toY(baseline)),
        stroke: COLORS.baseline, "stroke-width": "1", "stroke-dasharray": "4 3",
      }),
    );
  }
  if (pts.length > 1) {
    svg.appendChild(
      svgEl(doc, "polyline", {
        points: pts.map((p) => `${toX(p.t)},${toY(p.f1)}`).join(" "),
        fill: "none", stroke: COLORS.curve, "stroke-width": "1.5",
      }),
    );
  }
  for (const p of pts) {
    svg.appendChild(
      svgEl(doc, "circle", {
        class: "curve-point",
        "data-t": String(p.t),
        "data-f1": String(p.f1),
        cx: String(toX(p.t)), cy: String(toY(p.f1)), r: "2.5",
        fill: COLORS.curve,
      }),
    );
  }
  return svg;
}
