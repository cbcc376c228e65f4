// Hand-rolled SVG charts. These functions only map served values to pixel
// coordinates; they never derive new statistics.

const SVG_NS = "http://www.w3.org/2000/svg";

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, String(value));
  }
  return el;
}

export interface SeriesPoint {
  m: number;
  value: number;
}

export interface HistogramCurveSpec {
  bars: SeriesPoint[]; // empirical frequencies over (0, M]
  curve: SeriesPoint[]; // fitted pmf, may extend past M
  moveLimit: number;
}

export const CLUSTER_COLORS: Record<string, string> = {
  central: "#2a7de1",
  p_boundary: "#d64550",
  high_n: "#f2a33c",
  unclassified: "#8a8a8a",
};

const MARGIN = { top: 12, right: 14, bottom: 26, left: 46 };

export function histogramWithCurve(
  spec: HistogramCurveSpec,
  width = 680,
  height = 300,
): SVGSVGElement {
  const svg = svgElement("svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    class: "histogram-chart",
  });
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;
  const xMax = Math.max(
    spec.moveLimit,
    ...spec.curve.map((p) => p.m),
    ...spec.bars.map((p) => p.m),
  );
  const yMax = Math.max(
    1e-12,
    ...spec.bars.map((p) => p.value),
    ...spec.curve.map((p) => p.value),
  );
  const x = (m: number) => MARGIN.left + ((m - 0.5) / xMax) * innerW;
  const y = (v: number) => MARGIN.top + innerH * (1 - v / yMax);
  const barWidth = Math.max(1, (innerW / xMax) * 0.8);

  const plot = svgElement("g");
  svg.appendChild(plot);

  for (const bar of spec.bars) {
    plot.appendChild(
      svgElement("rect", {
        class: "bar",
        "data-m": bar.m,
        "data-value": bar.value,
        x: x(bar.m) - barWidth / 2,
        y: y(bar.value),
        width: barWidth,
        height: Math.max(0, MARGIN.top + innerH - y(bar.value)),
        fill: "#9ec4ee",
      }),
    );
  }

  if (spec.curve.length > 0) {
    const path = spec.curve
      .map((p, i) => `${i === 0 ? "M" : "L"}${x(p.m).toFixed(2)},${y(p.value).toFixed(2)}`)
      .join(" ");
    plot.appendChild(
      svgElement("path", {
        class: "fitted-curve",
        d: path,
        fill: "none",
        stroke: "#d64550",
        "stroke-width": 2,
      }),
    );
    for (const point of spec.curve) {
      plot.appendChild(
        svgElement("circle", {
          class: "curve-point",
          "data-m": point.m,
          "data-value": point.value,
          cx: x(point.m),
          cy: y(point.value),
          r: 1.6,
          fill: "#d64550",
        }),
      );
    }
  }

  // move-limit marker
  plot.appendChild(
    svgElement("line", {
      class: "move-limit-marker",
      x1: x(spec.moveLimit) + barWidth / 2,
      x2: x(spec.moveLimit) + barWidth / 2,
      y1: MARGIN.top,
      y2: MARGIN.top + innerH,
      stroke: "#444",
      "stroke-dasharray": "4 3",
    }),
  );

  // axes
  svg.appendChild(
    svgElement("line", {
      x1: MARGIN.left,
      x2: width - MARGIN.right,
      y1: MARGIN.top + innerH,
      y2: MARGIN.top + innerH,
      stroke: "#333",
    }),
  );
  const xLabel = svgElement("text", {
    x: MARGIN.left + innerW / 2,
    y: height - 6,
    "text-anchor": "middle",
    "font-size": 11,
  });
  xLabel.textContent = "moves used";
  svg.appendChild(xLabel);
  const yLabel = svgElement("text", {
    x: 12,
    y: MARGIN.top + innerH / 2,
    transform: `rotate(-90 12 ${MARGIN.top + innerH / 2})`,
    "text-anchor": "middle",
    "font-size": 11,
  });
  yLabel.textContent = "frequency";
  svg.appendChild(yLabel);
  return svg;
}

export interface ScatterPointSpec {
  levelId: string;
  p: number;
  n: number;
  cluster: string;
}

export function clusterScatter(
  points: ScatterPointSpec[],
  onSelect: (levelId: string) => void,
  width = 560,
  height = 420,
): SVGSVGElement {
  const svg = svgElement("svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    class: "cluster-scatter",
  });
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;
  const logs = points.map((pt) => Math.log10(pt.n));
  const yLo = Math.min(0, ...logs);
  const yHi = Math.max(1, ...logs) + 0.15;
  const x = (p: number) => MARGIN.left + p * innerW;
  const y = (n: number) =>
    MARGIN.top + innerH * (1 - (Math.log10(n) - yLo) / (yHi - yLo));

  for (const pt of points) {
    const circle = svgElement("circle", {
      class: "scatter-point",
      "data-level-id": pt.levelId,
      "data-cluster": pt.cluster,
      cx: x(pt.p),
      cy: y(pt.n),
      r: 4,
      fill: CLUSTER_COLORS[pt.cluster] ?? CLUSTER_COLORS.unclassified,
      cursor: "pointer",
    });
    const title = svgElement("title");
    title.textContent = `${pt.levelId} (${pt.cluster})`;
    circle.appendChild(title);
    circle.addEventListener("click", () => onSelect(pt.levelId));
    svg.appendChild(circle);
  }

  const xAxis = svgElement("line", {
    x1: MARGIN.left,
    x2: width - MARGIN.right,
    y1: MARGIN.top + innerH,
    y2: MARGIN.top + innerH,
    stroke: "#333",
  });
  svg.appendChild(xAxis);
  const xLabel = svgElement("text", {
    x: MARGIN.left + innerW / 2,
    y: height - 6,
    "text-anchor": "middle",
    "font-size": 11,
  });
  xLabel.textContent = "p";
  svg.appendChild(xLabel);
  const yLabel = svgElement("text", {
    x: 12,
    y: MARGIN.top + innerH / 2,
    transform: `rotate(-90 12 ${MARGIN.top + innerH / 2})`,
    "text-anchor": "middle",
    "font-size": 11,
  });
  yLabel.textContent = "n (log scale)";
  svg.appendChild(yLabel);
  return svg;
}
