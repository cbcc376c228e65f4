// Parameter-cluster explorer: every level as a (p, n) point, log-scaled in
// n and colored by cluster, linked to the level inspector.

import { ApiClient } from "./api.js";
import { CLUSTER_COLORS, clusterScatter } from "./charts.js";

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

export async function renderClusterScatter(
  client: ApiClient,
  onSelect: (levelId: string) => void,
): Promise<HTMLElement> {
  const root = el("section", "cluster-view");
  root.appendChild(el("h2", undefined, "Parameter clusters"));

  const [levels, analytics] = await Promise.all([
    client.listLevels(),
    client.analytics(),
  ]);
  if (levels.length === 0) {
    root.appendChild(el("div", "banner empty-state", "no levels loaded yet"));
    return root;
  }

  root.appendChild(
    clusterScatter(
      levels.map((lv) => ({
        levelId: lv.level_id,
        p: lv.p,
        n: lv.n,
        cluster: lv.cluster,
      })),
      onSelect,
    ),
  );

  const legend = el("div", "cluster-legend");
  for (const [name, count] of Object.entries(analytics.clusters)) {
    const item = el("span", "legend-item");
    const swatch = el("span", "legend-swatch");
    swatch.style.background = CLUSTER_COLORS[name] ?? CLUSTER_COLORS.unclassified;
    item.appendChild(swatch);
    item.appendChild(el("span", "legend-count", `${name}: ${count}`));
    legend.appendChild(item);
  }
  root.appendChild(legend);
  return root;
}
