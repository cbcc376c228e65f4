// @vitest-environment happy-dom
//
// Contract tests against the real difficulty service: a corpus is
// simulated and fitted through the Python CLI, the HTTP server is spawned
// on a free port, and the console views are checked against live payloads.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, test } from "vitest";

import { ApiClient } from "../src/api.js";
import { renderLevelView } from "../src/levelView.js";
import type { CurvePayload, WhatIfResponse } from "../src/types.js";

const PYTHON = process.env.LEVELFIT_PYTHON ?? "python3";

const CORPUS = {
  levels: [
    { level_id: "alpha", n: 20, p: 0.4, move_limit: 16, num_players: 150000, seed: 7 },
    { level_id: "beta", n: 35, p: 0.5, move_limit: 40, num_players: 150000, seed: 8 },
    { level_id: "gamma", n: 14, p: 0.6, move_limit: 22, num_players: 150000, seed: 9 },
    { level_id: "ramp", n: 1.35, p: 0.99985, move_limit: 25, num_players: 400000, seed: 10 },
  ],
};

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address && typeof address === "object") {
        const port = address.port;
        probe.close(() => resolve(port));
      } else {
        probe.close(() => reject(new Error("no port assigned")));
      }
    });
  });
}

let workDir: string;
let server: ChildProcess | null = null;
let baseUrl: string;
let client: ApiClient;

async function waitForServer(url: string, timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${url}/levels`);
      if (response.ok) return;
    } catch (error) {
      lastError = error;
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`service did not come up at ${url}: ${lastError}`);
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "levelfit-console-"));
  const spec = join(workDir, "corpus.json");
  const histograms = join(workDir, "histograms.json");
  const fits = join(workDir, "fits.json");
  writeFileSync(spec, JSON.stringify(CORPUS));
  const cli = (...args: string[]) =>
    execFileSync(PYTHON, ["-m", "levelfit.cli", ...args], { stdio: "pipe" });
  cli("simulate", "--spec", spec, "--out", histograms, "--format", "json");
  cli("fit", "--input", histograms, "--out", fits, "--grid", "10x10", "--jobs", "2");

  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(
    PYTHON,
    ["-m", "levelfit.cli", "serve", "--fits", fits, "--input", histograms, "--port", String(port)],
    { stdio: "ignore" },
  );
  await waitForServer(baseUrl);
  client = new ApiClient(baseUrl, (url, init) => fetch(url, init));
});

afterAll(() => {
  if (server) server.kill("SIGTERM");
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("console against the live service", () => {
  test("slider readout equals the service what-if to three decimals", async () => {
    const view = await renderLevelView(client, "alpha");
    for (const delta of [-3, 2, 5]) {
      view.setDelta(delta);
      await view.whenIdle();
      const direct = (await (
        await fetch(`${baseUrl}/levels/alpha/whatif`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify({ delta, apply_correction: false }),
        })
      ).json()) as WhatIfResponse;
      const readout = view.element.querySelector(
        ".readout.predicted .readout-value",
      )?.textContent;
      expect(readout).toBe(direct.predicted.toFixed(3));
      const baseline = view.element.querySelector(
        ".readout.baseline .readout-value",
      )?.textContent;
      expect(baseline).toBe(direct.baseline.toFixed(3));
    }
  });

  test("curve overlay points equal the curve payload", async () => {
    const view = await renderLevelView(client, "beta");
    const payload = (await (
      await fetch(`${baseUrl}/levels/beta/curve?from=1&to=50`)
    ).json()) as CurvePayload;
    const points = [...view.element.querySelectorAll(".curve-point")];
    expect(points).toHaveLength(payload.points.length);
    points.forEach((pt, i) => {
      expect(Number(pt.getAttribute("data-m"))).toBe(payload.points[i].m);
      expect(Number(pt.getAttribute("data-value"))).toBe(payload.points[i].pmf);
    });
  });

  test("non-converged level disables the slider", async () => {
    const view = await renderLevelView(client, "ramp");
    const slider = view.element.querySelector(".delta-slider") as HTMLInputElement;
    expect(slider.disabled).toBe(true);
    expect(view.element.textContent).toContain("did not converge");
    // the service would refuse anyway
    const refused = await fetch(`${baseUrl}/levels/ramp/whatif`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ delta: 1, apply_correction: false }),
    });
    expect(refused.status).toBe(409);
  });

  test("histogram bars echo the served frequencies", async () => {
    const view = await renderLevelView(client, "gamma");
    const detail = (await (await fetch(`${baseUrl}/levels/gamma`)).json()) as {
      frequencies: Record<string, number>;
    };
    const bars = [...view.element.querySelectorAll(".bar")];
    const served = Object.entries(detail.frequencies);
    expect(bars).toHaveLength(served.length);
    bars.forEach((bar, i) => {
      expect(Number(bar.getAttribute("data-m"))).toBe(Number(served[i][0]));
      expect(Number(bar.getAttribute("data-value"))).toBe(served[i][1]);
    });
  });

  test("level browser data matches the service list", async () => {
    const levels = await client.listLevels();
    expect(levels.map((lv) => lv.level_id).sort()).toEqual([
      "alpha",
      "beta",
      "gamma",
      "ramp",
    ]);
    const ramp = levels.find((lv) => lv.level_id === "ramp");
    expect(ramp?.converged).toBe(false);
    expect(ramp?.cluster).toBe("p_boundary");
  });
});
