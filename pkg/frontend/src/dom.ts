// Thin DOM layer: materializes view models produced by promptview.ts.

import type { ModelStats } from "./api.js";
import type { PromptView } from "./promptview.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function renderIdle(root: HTMLElement): void {
  root.replaceChildren(el("div", "idle", "No pending requests — all quiet."));
}

export function renderError(root: HTMLElement, message: string | null): void {
  root.replaceChildren();
  if (message) {
    root.appendChild(el("div", "error-bar", message));
  }
}

export function renderStats(root: HTMLElement, stats: ModelStats): void {
  const verdicts = Object.entries(stats.verdicts)
    .map(([k, v]) => `${k}: ${v}`)
    .join("   ");
  const line = `${verdicts}   pending: ${stats.pending}   resolved: ${stats.resolved}`;
  root.replaceChildren(el("div", "stats-line", line));
}

export function renderLastDecision(
  root: HTMLElement,
  decision: { allow: boolean; postPLegal: number } | null,
): void {
  root.replaceChildren();
  if (decision) {
    const verdict = decision.allow ? "allowed" : "denied";
    root.appendChild(
      el(
        "div",
        "last-decision",
        `last answer: ${verdict}; this context now scores p=${decision.postPLegal.toFixed(3)}`,
      ),
    );
  }
}

export function renderPrompt(
  root: HTMLElement,
  view: PromptView,
  gridVisible: boolean,
  onDecision: (ticketId: string, allow: boolean) => void,
  onToggleGrid: () => void,
): void {
  root.replaceChildren();
  const card = el("div", "prompt-card");

  const meta = el("div", "prompt-meta");
  meta.appendChild(el("span", "permission", view.meta.permission));
  meta.appendChild(el("span", "package", view.meta.packageId));
  meta.appendChild(el("span", "entry", `after ${view.meta.entryEvent}`));
  card.appendChild(meta);

  if (view.banner) {
    card.appendChild(el("div", "banner", view.banner));
  } else if (view.rawFields) {
    const pre = el("pre", "raw-fields");
    pre.textContent = Object.entries(view.rawFields)
      .map(([k, v]) => `${k}: ${v}`)
      .join("\n");
    card.appendChild(pre);
  } else if (view.window) {
    const frame = el("div", "window-frame");
    frame.style.width = `${view.window.width}px`;
    frame.style.height = `${view.window.height}px`;
    for (const w of view.widgets) {
      const boxEl = el("div", w.highlighted ? "widget highlighted" : "widget", w.label);
      if (w.clickable) {
        boxEl.classList.add("clickable");
      }
      boxEl.style.left = `${w.box.left}px`;
      boxEl.style.top = `${w.box.top}px`;
      boxEl.style.width = `${w.box.width}px`;
      boxEl.style.height = `${w.box.height}px`;
      boxEl.title = w.widgetId;
      frame.appendChild(boxEl);
    }
    if (gridVisible && view.grid) {
      for (const x of view.grid.vertical) {
        const line = el("div", "grid-line vertical");
        line.style.left = `${x}px`;
        frame.appendChild(line);
      }
      for (const y of view.grid.horizontal) {
        const line = el("div", "grid-line horizontal");
        line.style.top = `${y}px`;
        frame.appendChild(line);
      }
    }
    card.appendChild(frame);
  }

  const controls = el("div", "controls");
  const allow = el("button", "allow", "Allow") as HTMLButtonElement;
  allow.addEventListener("click", () => onDecision(view.ticketId, true));
  const deny = el("button", "deny", "Deny") as HTMLButtonElement;
  deny.addEventListener("click", () => onDecision(view.ticketId, false));
  const grid = el("button", "grid-toggle", gridVisible ? "Hide grid" : "Show grid");
  grid.addEventListener("click", onToggleGrid);
  controls.append(allow, deny, grid);
  card.appendChild(controls);

  root.appendChild(card);
}
