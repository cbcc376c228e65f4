// Level inspector: histogram + fitted-curve overlay, fit badges, and a
// move-limit slider that drives live what-if predictions.
//
// All displayed numbers are copied verbatim from server payloads (the
// readouts render to three decimals); the slider issues debounced what-if
// calls with at most one request in flight.

import { ApiClient, ApiError } from "./api.js";
import { histogramWithCurve } from "./charts.js";
import type { LevelDetail, WhatIfResponse } from "./types.js";
import { WhatIfQueue } from "./whatifQueue.js";

export interface LevelViewOptions {
  deltaRange?: number; // slider spans [-deltaRange, +deltaRange]
  curveOverhang?: number; // fitted curve drawn this far past the limit
  debounceMs?: number;
}

export interface LevelViewHandle {
  element: HTMLElement;
  /** Move the slider programmatically (same path as user input). */
  setDelta(delta: number): void;
  /** Resolves when no what-if call is queued, debouncing or in flight. */
  whenIdle(): Promise<void>;
}

const THREE_DECIMALS = (value: number) => value.toFixed(3);

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function badge(text: string, kind: string): HTMLElement {
  return el("span", `badge badge-${kind}`, text);
}

function fitBadges(detail: LevelDetail): HTMLElement {
  const wrap = el("div", "badges");
  wrap.appendChild(
    detail.converged
      ? badge("converged", "ok")
      : badge(`boundary: ${detail.fit.boundary_hit.join(", ") || "none"}`, "warn"),
  );
  wrap.appendChild(badge(`D = ${THREE_DECIMALS(detail.D)}`, "info"));
  wrap.appendChild(badge(detail.cluster, detail.cluster));
  return wrap;
}

function readout(label: string, className: string, value: string): HTMLElement {
  const box = el("div", `readout ${className}`);
  box.appendChild(el("div", "readout-label", label));
  box.appendChild(el("div", "readout-value", value));
  return box;
}

export async function renderLevelView(
  client: ApiClient,
  levelId: string,
  options: LevelViewOptions = {},
): Promise<LevelViewHandle> {
  const deltaRange = options.deltaRange ?? 10;
  const overhang = options.curveOverhang ?? deltaRange;
  const root = el("section", "level-view");

  let detail: LevelDetail;
  try {
    detail = await client.levelDetail(levelId);
  } catch (error) {
    if (error instanceof ApiError && error.status === 404) {
      root.appendChild(el("div", "banner banner-error", `level not found: ${levelId}`));
      return { element: root, setDelta: () => {}, whenIdle: () => Promise.resolve() };
    }
    throw error;
  }
  const curve = await client.curve(levelId, 1, detail.move_limit + overhang);

  const header = el("header", "level-header");
  header.appendChild(el("h2", undefined, detail.level_id));
  header.appendChild(fitBadges(detail));
  root.appendChild(header);

  root.appendChild(
    histogramWithCurve({
      bars: Object.entries(detail.frequencies).map(([m, value]) => ({
        m: Number(m),
        value,
      })),
      curve: curve.points.map((pt) => ({ m: pt.m, value: pt.pmf })),
      moveLimit: detail.move_limit,
    }),
  );

  const controls = el("div", "whatif-controls");
  const sliderRow = el("div", "slider-row");
  const slider = el("input") as HTMLInputElement;
  slider.type = "range";
  slider.min = String(Math.max(-deltaRange, 1 - detail.move_limit));
  slider.max = String(deltaRange);
  slider.step = "1";
  slider.value = "0";
  slider.className = "delta-slider";
  const deltaLabel = el("span", "delta-label", "Δ = 0");
  sliderRow.appendChild(el("span", "slider-caption", "move limit change"));
  sliderRow.appendChild(slider);
  sliderRow.appendChild(deltaLabel);
  controls.appendChild(sliderRow);

  const readouts = el("div", "readouts");
  const baseline = readout(
    "baseline completion",
    "baseline",
    THREE_DECIMALS(detail.fitted_completion),
  );
  const predicted = readout(
    "predicted completion",
    "predicted",
    THREE_DECIMALS(detail.fitted_completion),
  );
  const change = readout("change", "change", "+0.000");
  readouts.appendChild(baseline);
  readouts.appendChild(predicted);
  readouts.appendChild(change);
  controls.appendChild(readouts);
  root.appendChild(controls);

  const setReadout = (box: HTMLElement, value: string) => {
    const node = box.querySelector(".readout-value");
    if (node) node.textContent = value;
  };

  const applyResponse = (response: WhatIfResponse) => {
    setReadout(baseline, THREE_DECIMALS(response.baseline));
    setReadout(predicted, THREE_DECIMALS(response.predicted));
    const sign = response.change >= 0 ? "+" : "";
    setReadout(change, `${sign}${THREE_DECIMALS(response.change)}`);
    change.classList.toggle("change-up", response.change > 0);
    change.classList.toggle("change-down", response.change < 0);
  };

  const errorBanner = el("div", "banner banner-error hidden");
  root.appendChild(errorBanner);

  const queue = new WhatIfQueue(
    (delta) => client.whatIf(levelId, delta),
    applyResponse,
    (error) => {
      errorBanner.textContent =
        error instanceof ApiError ? `what-if failed: ${error.code}` : "what-if failed";
      errorBanner.classList.remove("hidden");
    },
    options.debounceMs ?? 120,
  );

  const setDelta = (delta: number) => {
    slider.value = String(delta);
    deltaLabel.textContent = `Δ = ${delta}`;
    if (delta === 0) {
      // baseline is already on screen; nothing to ask the server
      setReadout(predicted, THREE_DECIMALS(detail.fitted_completion));
      setReadout(change, "+0.000");
      change.classList.remove("change-up", "change-down");
      return;
    }
    queue.request(delta);
  };

  if (detail.converged) {
    slider.addEventListener("input", () => setDelta(Number(slider.value)));
  } else {
    // mirrors the service's 409 on what-if for non-converged fits
    slider.disabled = true;
    controls.appendChild(
      el(
        "div",
        "banner banner-warn slider-disabled-note",
        "what-if disabled: the fit did not converge (parameter boundary reached)",
      ),
    );
  }

  return {
    element: root,
    setDelta,
    whenIdle: () => queue.idle(),
  };
}
