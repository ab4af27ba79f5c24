/* =========================================
   Chart rendering

   Hand-rolled SVG, no charting library.  One hard rule governs
   everything here: a missing day is drawn as a gap.  Line charts
   break the path wherever the series has a null, bar charts simply
   omit the bar — no interpolation, smoothing or carry-forward, so
   the clinician sees exactly which days had data.

   Server-provided annotations are drawn as labelled extras:
   - mean_line        horizontal line across its interval
   - trend_segment    fitted segment from start to end point
   - highlight_point  ring around a single flagged observation
   - split_marker     vertical rule at a boundary date (e.g. the
                      last session, separating "before" and "after")
   ========================================= */

import type { ChartAnnotation, ChartSpec, SeriesPoint } from "./types.js";

export const CHART_WIDTH = 640;
export const CHART_HEIGHT = 220;
const MARGIN = { top: 14, right: 18, bottom: 30, left: 52 };

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [name, value] of Object.entries(attrs)) {
    el.setAttribute(name, String(value));
  }
  return el;
}

function epochDay(iso: string): number {
  return Date.parse(`${iso}T00:00:00Z`) / 86_400_000;
}

interface Scales {
  x: (iso: string) => number;
  y: (value: number) => number;
}

function annotationDates(annotation: ChartAnnotation): string[] {
  switch (annotation.kind) {
    case "mean_line":
      return [annotation.interval.start, annotation.interval.end];
    case "trend_segment":
      return [annotation.start_point.date, annotation.end_point.date];
    case "highlight_point":
    case "split_marker":
      return [annotation.date];
  }
}

function annotationValues(annotation: ChartAnnotation): number[] {
  switch (annotation.kind) {
    case "mean_line":
      return [annotation.value];
    case "trend_segment":
      return [annotation.start_point.value, annotation.end_point.value];
    case "highlight_point":
      return [annotation.value];
    case "split_marker":
      return [];
  }
}

function buildScales(chart: ChartSpec): Scales {
  const days: number[] = chart.series.map((p) => epochDay(p.date));
  const values: number[] = chart.series
    .map((p) => p.value)
    .filter((v): v is number => v !== null);
  for (const annotation of chart.annotations) {
    days.push(...annotationDates(annotation).map(epochDay));
    values.push(...annotationValues(annotation));
  }

  let dayMin = Math.min(...days);
  let daySpan = Math.max(...days) - dayMin;
  if (!Number.isFinite(dayMin)) {
    dayMin = 0;
    daySpan = 1;
  }
  if (daySpan === 0) {
    daySpan = 1;
  }

  let valueMin = values.length > 0 ? Math.min(...values) : 0;
  let valueMax = values.length > 0 ? Math.max(...values) : 1;
  if (valueMin === valueMax) {
    valueMin -= 0.5;
    valueMax += 0.5;
  }
  const pad = (valueMax - valueMin) * 0.08;
  valueMin -= pad;
  valueMax += pad;

  const innerWidth = CHART_WIDTH - MARGIN.left - MARGIN.right;
  const innerHeight = CHART_HEIGHT - MARGIN.top - MARGIN.bottom;
  return {
    x: (iso) => MARGIN.left + ((epochDay(iso) - dayMin) / daySpan) * innerWidth,
    y: (value) =>
      MARGIN.top + (1 - (value - valueMin) / (valueMax - valueMin)) * innerHeight,
  };
}

/** Contiguous non-null stretches of the series; the unit a line connects. */
export function observedRuns(series: SeriesPoint[]): SeriesPoint[][] {
  const runs: SeriesPoint[][] = [];
  let current: SeriesPoint[] = [];
  for (const point of series) {
    if (point.value === null) {
      if (current.length > 0) {
        runs.push(current);
        current = [];
      }
    } else {
      current.push(point);
    }
  }
  if (current.length > 0) {
    runs.push(current);
  }
  return runs;
}

function drawLineSeries(
  root: SVGSVGElement,
  chart: ChartSpec,
  scales: Scales,
  accent: string,
): void {
  for (const run of observedRuns(chart.series)) {
    if (run.length >= 2) {
      const d = run
        .map(
          (p, i) =>
            `${i === 0 ? "M" : "L"}${scales.x(p.date).toFixed(1)} ${scales
              .y(p.value as number)
              .toFixed(1)}`,
        )
        .join(" ");
      root.appendChild(
        svgEl("path", {
          class: "series-run",
          d,
          fill: "none",
          stroke: accent,
          "stroke-width": 1.6,
        }),
      );
    }
    // Dots keep single observations (and run endpoints) visible even
    // when gaps isolate them from any connecting line.
    for (const point of run) {
      root.appendChild(
        svgEl("circle", {
          class: "series-point",
          cx: scales.x(point.date).toFixed(1),
          cy: scales.y(point.value as number).toFixed(1),
          r: run.length === 1 ? 2.6 : 1.6,
          fill: accent,
        }),
      );
    }
  }
}

function drawBarSeries(
  root: SVGSVGElement,
  chart: ChartSpec,
  scales: Scales,
  accent: string,
): void {
  const slot =
    (CHART_WIDTH - MARGIN.left - MARGIN.right) / Math.max(chart.series.length, 1);
  const barWidth = Math.max(2, Math.min(26, slot * 0.7));
  const baseline = CHART_HEIGHT - MARGIN.bottom;
  for (const point of chart.series) {
    if (point.value === null) {
      continue;
    }
    const top = scales.y(point.value);
    root.appendChild(
      svgEl("rect", {
        class: "series-bar",
        x: (scales.x(point.date) - barWidth / 2).toFixed(1),
        y: Math.min(top, baseline).toFixed(1),
        width: barWidth.toFixed(1),
        height: Math.max(1, Math.abs(baseline - top)).toFixed(1),
        fill: accent,
      }),
    );
  }
}

function drawAnnotation(
  root: SVGSVGElement,
  annotation: ChartAnnotation,
  scales: Scales,
): void {
  switch (annotation.kind) {
    case "mean_line": {
      const y = scales.y(annotation.value);
      root.appendChild(
        svgEl("line", {
          class: "annotation-mean-line",
          x1: scales.x(annotation.interval.start).toFixed(1),
          x2: scales.x(annotation.interval.end).toFixed(1),
          y1: y.toFixed(1),
          y2: y.toFixed(1),
        }),
      );
      break;
    }
    case "trend_segment":
      root.appendChild(
        svgEl("line", {
          class: "annotation-trend-segment",
          x1: scales.x(annotation.start_point.date).toFixed(1),
          y1: scales.y(annotation.start_point.value).toFixed(1),
          x2: scales.x(annotation.end_point.date).toFixed(1),
          y2: scales.y(annotation.end_point.value).toFixed(1),
        }),
      );
      break;
    case "highlight_point":
      root.appendChild(
        svgEl("circle", {
          class: "annotation-highlight-point",
          cx: scales.x(annotation.date).toFixed(1),
          cy: scales.y(annotation.value).toFixed(1),
          r: 5,
        }),
      );
      break;
    case "split_marker":
      root.appendChild(
        svgEl("line", {
          class: "annotation-split-marker",
          x1: scales.x(annotation.date).toFixed(1),
          x2: scales.x(annotation.date).toFixed(1),
          y1: MARGIN.top,
          y2: CHART_HEIGHT - MARGIN.bottom,
        }),
      );
      break;
  }
}

function drawFrame(root: SVGSVGElement, chart: ChartSpec): void {
  root.appendChild(
    svgEl("line", {
      class: "axis",
      x1: MARGIN.left,
      x2: CHART_WIDTH - MARGIN.right,
      y1: CHART_HEIGHT - MARGIN.bottom,
      y2: CHART_HEIGHT - MARGIN.bottom,
    }),
  );
  const yLabel = svgEl("text", {
    class: "y-label",
    x: 12,
    y: CHART_HEIGHT / 2,
    transform: `rotate(-90 12 ${CHART_HEIGHT / 2})`,
    "text-anchor": "middle",
  });
  yLabel.textContent = chart.y_label;
  root.appendChild(yLabel);

  if (chart.series.length > 0) {
    const first = chart.series[0].date;
    const last = chart.series[chart.series.length - 1].date;
    const startLabel = svgEl("text", {
      class: "x-tick",
      x: MARGIN.left,
      y: CHART_HEIGHT - 8,
      "text-anchor": "start",
    });
    startLabel.textContent = first;
    const endLabel = svgEl("text", {
      class: "x-tick",
      x: CHART_WIDTH - MARGIN.right,
      y: CHART_HEIGHT - 8,
      "text-anchor": "end",
    });
    endLabel.textContent = last;
    root.appendChild(startLabel);
    root.appendChild(endLabel);
  }
}

/** Render one chart spec to a standalone SVG element. */
export function renderChart(chart: ChartSpec, accent: string): SVGSVGElement {
  const root = svgEl("svg", {
    class: `insight-chart chart-${chart.chart_kind}`,
    viewBox: `0 0 ${CHART_WIDTH} ${CHART_HEIGHT}`,
    role: "img",
    "data-fact-id": chart.fact_id,
  });
  root.setAttribute("aria-label", chart.y_label);

  const scales = buildScales(chart);
  drawFrame(root, chart);
  if (chart.chart_kind === "bar") {
    drawBarSeries(root, chart, scales, accent);
  } else {
    drawLineSeries(root, chart, scales, accent);
  }
  for (const annotation of chart.annotations) {
    drawAnnotation(root, annotation, scales);
  }
  return root;
}
