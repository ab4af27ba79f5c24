import { describe, expect, it } from "vitest";

import { observedRuns, renderChart } from "../src/charts.js";
import type { Bundle, ChartSpec, SeriesPoint } from "../src/types.js";
import { loadBundle } from "./helpers.js";

const ACCENT = "#2f6fb2";

function chartsByFactType(bundle: Bundle, factType: string): ChartSpec[] {
  return Object.values(bundle.charts).filter(
    (chart) => bundle.facts[chart.fact_id]?.fact_type === factType,
  );
}

function pt(date: string, value: number | null): SeriesPoint {
  return { date, value };
}

describe("observedRuns", () => {
  it("splits a series at every null", () => {
    const series = [
      pt("2025-06-01", 1),
      pt("2025-06-02", 2),
      pt("2025-06-03", null),
      pt("2025-06-04", 3),
      pt("2025-06-05", null),
      pt("2025-06-06", null),
      pt("2025-06-07", 4),
      pt("2025-06-08", 5),
    ];
    const runs = observedRuns(series);
    expect(runs.map((r) => r.length)).toEqual([2, 1, 2]);
  });

  it("returns nothing for an all-missing series", () => {
    expect(observedRuns([pt("2025-06-01", null)])).toEqual([]);
  });
});

describe("line charts", () => {
  it("never draws a line across a missing day", () => {
    const chart: ChartSpec = {
      fact_id: "f_test",
      chart_kind: "line",
      series: [pt("2025-06-01", 2), pt("2025-06-02", null), pt("2025-06-03", 4)],
      annotations: [],
      y_label: "value",
    };
    const svg = renderChart(chart, ACCENT);
    // Two isolated observations: no connecting path at all, two dots.
    expect(svg.querySelectorAll(".series-run")).toHaveLength(0);
    expect(svg.querySelectorAll(".series-point")).toHaveLength(2);
  });

  it("draws one path per contiguous run on real data", () => {
    const bundle = loadBundle();
    let gappy = 0;
    for (const chart of Object.values(bundle.charts)) {
      if (chart.chart_kind !== "line") {
        continue;
      }
      const runs = observedRuns(chart.series);
      const svg = renderChart(chart, ACCENT);
      const paths = svg.querySelectorAll(".series-run");
      expect(paths).toHaveLength(runs.filter((r) => r.length >= 2).length);
      const observed = chart.series.filter((p) => p.value !== null).length;
      expect(svg.querySelectorAll(".series-point")).toHaveLength(observed);
      if (runs.length > 1) {
        gappy += 1;
      }
    }
    // The fixture has 30% missing days, so gaps must actually occur.
    expect(gappy).toBeGreaterThan(0);
  });

  it("each path contains exactly its run's points", () => {
    const chart: ChartSpec = {
      fact_id: "f_test",
      chart_kind: "line",
      series: [
        pt("2025-06-01", 1),
        pt("2025-06-02", 2),
        pt("2025-06-03", 3),
        pt("2025-06-04", null),
        pt("2025-06-05", 5),
        pt("2025-06-06", 6),
      ],
      annotations: [],
      y_label: "value",
    };
    const svg = renderChart(chart, ACCENT);
    const ds = [...svg.querySelectorAll(".series-run")].map(
      (p) => p.getAttribute("d") ?? "",
    );
    const commandCounts = ds.map((d) => (d.match(/[ML]/g) ?? []).length);
    expect(commandCounts).toEqual([3, 2]);
  });
});

describe("bar charts", () => {
  it("draws one bar per observed value and none for gaps", () => {
    const bundle = loadBundle();
    const bars = Object.values(bundle.charts).filter(
      (c) => c.chart_kind === "bar",
    );
    expect(bars.length).toBeGreaterThan(0);
    for (const chart of bars) {
      const svg = renderChart(chart, ACCENT);
      const observed = chart.series.filter((p) => p.value !== null).length;
      expect(svg.querySelectorAll(".series-bar")).toHaveLength(observed);
    }
  });
});

describe("annotations", () => {
  it("comparison charts carry two mean lines and a split marker", () => {
    const bundle = loadBundle();
    const comparisons = chartsByFactType(bundle, "comparison");
    expect(comparisons.length).toBeGreaterThan(0);
    for (const chart of comparisons) {
      const svg = renderChart(chart, ACCENT);
      expect(svg.querySelectorAll(".annotation-mean-line")).toHaveLength(2);
      expect(svg.querySelectorAll(".annotation-split-marker")).toHaveLength(1);
    }
  });

  it("trend charts carry the fitted segment", () => {
    const bundle = loadBundle();
    const trends = chartsByFactType(bundle, "trend").filter((c) =>
      c.annotations.some((a) => a.kind === "trend_segment"),
    );
    expect(trends.length).toBeGreaterThan(0);
    for (const chart of trends) {
      const svg = renderChart(chart, ACCENT);
      expect(
        svg.querySelectorAll(".annotation-trend-segment").length,
      ).toBeGreaterThan(0);
    }
  });

  it("outlier and extreme charts ring the flagged observation", () => {
    const bundle = loadBundle();
    let checked = 0;
    for (const factType of ["outlier", "extreme"]) {
      for (const chart of chartsByFactType(bundle, factType)) {
        const expected = chart.annotations.filter(
          (a) => a.kind === "highlight_point",
        ).length;
        if (expected === 0) {
          continue;
        }
        const svg = renderChart(chart, ACCENT);
        expect(
          svg.querySelectorAll(".annotation-highlight-point"),
        ).toHaveLength(expected);
        checked += 1;
      }
    }
    expect(checked).toBeGreaterThan(0);
  });

  it("every fixture chart renders every annotation it declares", () => {
    const bundle = loadBundle();
    for (const chart of Object.values(bundle.charts)) {
      const svg = renderChart(chart, ACCENT);
      const drawn =
        svg.querySelectorAll(
          ".annotation-mean-line, .annotation-trend-segment, " +
            ".annotation-highlight-point, .annotation-split-marker",
        ).length;
      expect(drawn).toBe(chart.annotations.length);
    }
  });
});

describe("chart frame", () => {
  it("labels the y axis with the bundle's unit text", () => {
    const bundle = loadBundle();
    const chart = Object.values(bundle.charts)[0];
    const svg = renderChart(chart, ACCENT);
    expect(svg.querySelector(".y-label")?.textContent).toBe(chart.y_label);
  });

  it("tolerates an all-null series", () => {
    const chart: ChartSpec = {
      fact_id: "f_test",
      chart_kind: "line",
      series: [pt("2025-06-01", null), pt("2025-06-02", null)],
      annotations: [],
      y_label: "value",
    };
    const svg = renderChart(chart, ACCENT);
    expect(svg.querySelectorAll(".series-run")).toHaveLength(0);
    expect(svg.querySelectorAll(".series-point")).toHaveLength(0);
  });
});
