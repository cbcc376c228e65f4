// Hash-routed single page: level browser + cluster scatter on the index,
// the level inspector on #/level/<id>.

import { ApiClient } from "./api.js";
import { renderLevelView } from "./levelView.js";
import { renderClusterScatter } from "./scatter.js";
import type { LevelSummary } from "./types.js";

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

function levelRow(level: LevelSummary): HTMLElement {
  const row = el("tr");
  const link = el("a", "level-link", level.level_id) as HTMLAnchorElement;
  link.href = `#/level/${encodeURIComponent(level.level_id)}`;
  const idCell = el("td");
  idCell.appendChild(link);
  row.appendChild(idCell);
  row.appendChild(el("td", undefined, String(level.move_limit)));
  row.appendChild(el("td", undefined, level.observed_completion.toFixed(3)));
  row.appendChild(el("td", undefined, level.fitted_completion.toFixed(3)));
  row.appendChild(el("td", undefined, level.D.toFixed(3)));
  row.appendChild(el("td", undefined, level.converged ? "yes" : "no"));
  row.appendChild(el("td", `cluster-cell cluster-${level.cluster}`, level.cluster));
  return row;
}

async function renderIndex(client: ApiClient): Promise<HTMLElement> {
  const root = el("div", "index-view");
  const levels = await client.listLevels();

  const browser = el("section", "level-browser");
  browser.appendChild(el("h2", undefined, `Levels (${levels.length})`));
  const table = el("table", "level-table");
  const head = el("tr");
  for (const caption of ["level", "moves", "observed", "fitted", "D", "converged", "cluster"]) {
    head.appendChild(el("th", undefined, caption));
  }
  table.appendChild(head);
  for (const level of levels) table.appendChild(levelRow(level));
  browser.appendChild(table);
  root.appendChild(browser);

  root.appendChild(
    await renderClusterScatter(client, (levelId) => {
      window.location.hash = `#/level/${encodeURIComponent(levelId)}`;
    }),
  );
  return root;
}

export async function route(client: ApiClient, hash: string): Promise<HTMLElement> {
  const match = /^#\/level\/(.+)$/.exec(hash);
  if (match) {
    const handle = await renderLevelView(client, decodeURIComponent(match[1]));
    const wrap = el("div");
    const back = el("a", "back-link", "← all levels") as HTMLAnchorElement;
    back.href = "#/";
    wrap.appendChild(back);
    wrap.appendChild(handle.element);
    return wrap;
  }
  return renderIndex(client);
}

export function startApp(root: HTMLElement, client = new ApiClient("")): void {
  const rerender = () => {
    root.textContent = "loading…";
    route(client, window.location.hash)
      .then((view) => {
        root.textContent = "";
        root.appendChild(view);
      })
      .catch((error) => {
        root.textContent = "";
        root.appendChild(el("div", "banner banner-error", String(error)));
      });
  };
  window.addEventListener("hashchange", rerender);
  rerender();
}
