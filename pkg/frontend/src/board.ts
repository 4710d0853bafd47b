// DOM rendering: the grid, the two merged base regions, pawns, highlights,
// the guidance hint, and the progress/stats chrome.

import type { ViewState } from "./controller.js";
import { hintLabel, progressLabel, statsLabel } from "./model.js";
import type { MoveJson, StatePayload } from "./types.js";

export interface BoardCallbacks {
  onSquare(x: number, y: number): void;
  onWhiteBase(): void;
  onBlackBase(): void;
  onRetry(): void;
}

export class BoardView {
  private grid: HTMLElement;
  private header: HTMLElement;
  private notice: HTMLElement;
  private banner: HTMLElement;
  private statsBox: HTMLElement;
  private hint: HTMLElement;
  private retryButton: HTMLButtonElement;

  constructor(root: HTMLElement, private callbacks: BoardCallbacks) {
    this.header = el("div", "header");
    this.hint = el("div", "hint");
    this.grid = el("div", "grid");
    this.notice = el("div", "notice");
    this.banner = el("div", "banner");
    this.statsBox = el("div", "stats");
    this.retryButton = document.createElement("button");
    this.retryButton.textContent = "retry";
    this.retryButton.className = "retry hidden";
    this.retryButton.addEventListener("click", () => this.callbacks.onRetry());
    this.notice.appendChild(this.retryButton);
    root.append(this.header, this.hint, this.banner, this.grid, this.notice, this.statsBox);
  }

  render(view: ViewState): void {
    const payload = view.payload;
    this.header.textContent = payload
      ? `${progressLabel(payload)}  ${statsLabel(payload)}`
      : "connecting";
    this.renderNotice(view);
    this.renderBanner(payload);
    this.renderHint(payload);
    if (payload?.squares && payload.board) {
      this.renderGrid(view, payload);
    }
    this.renderStats(view);
  }

  private renderNotice(view: ViewState): void {
    this.notice.childNodes.forEach((node) => {
      if (node !== this.retryButton) {
        node.remove();
      }
    });
    if (view.notice) {
      this.notice.insertBefore(document.createTextNode(view.notice), this.retryButton);
    }
    this.retryButton.classList.toggle("hidden", !view.canRetry);
  }

  private renderBanner(payload: StatePayload | null): void {
    if (payload?.pending === "finished") {
      this.banner.textContent = payload.error
        ? `session failed: ${payload.error}`
        : "plan complete";
      this.banner.className = "banner done";
    } else if (payload?.status === "won") {
      this.banner.textContent = `${payload.winner} wins`;
      this.banner.className = "banner won";
    } else {
      this.banner.textContent = "";
      this.banner.className = "banner";
    }
  }

  private renderHint(payload: StatePayload | null): void {
    this.hint.textContent = hintLabel(payload);
  }

  private renderGrid(view: ViewState, payload: StatePayload): void {
    const { n, a } = payload.board!;
    const squares = payload.squares!;
    const highlightSet = new Set(view.highlights.destinations.map(([x, y]) => `${x},${y}`));
    const suggested = payload.pending === "waiting_human" ? payload.suggested : null;
    const interactive = payload.pending === "waiting_human";
    this.grid.replaceChildren();
    this.grid.style.gridTemplateColumns = `repeat(${n}, var(--cell))`;
    this.grid.classList.toggle("disabled", !interactive);
    for (let row = n - 1; row >= 0; row--) {
      for (let x = 0; x < n; x++) {
        const y = row;
        if (x < a && y < a) {
          if (x === 0 && y === a - 1) {
            this.grid.appendChild(this.baseCell(
              "white", a, payload.base_counts?.white ?? 0,
              view.selection?.kind === "base",
            ));
          }
          continue;
        }
        if (x >= n - a && y >= n - a) {
          if (x === n - a && y === n - 1) {
            this.grid.appendChild(this.baseCell(
              "black", a, payload.base_counts?.black ?? 0,
              view.highlights.enterAvailable,
            ));
          }
          continue;
        }
        const cell = el("div", "cell");
        const occupant = squares[y]?.[x] ?? "empty";
        if (occupant !== "empty") {
          const pawn = el("div", `pawn ${occupant}`);
          cell.appendChild(pawn);
        }
        if (
          view.selection?.kind === "pawn" &&
          view.selection.x === x &&
          view.selection.y === y
        ) {
          cell.classList.add("selected");
        }
        if (highlightSet.has(`${x},${y}`)) {
          cell.classList.add("target");
        }
        markSuggestion(cell, suggested, x, y);
        if (view.lastEngineMove) {
          markEngineMove(cell, view.lastEngineMove, x, y);
        }
        cell.addEventListener("click", () => this.callbacks.onSquare(x, y));
        this.grid.appendChild(cell);
      }
    }
  }

  private baseCell(color: "white" | "black", a: number, count: number, active: boolean): HTMLElement {
    const cell = el("div", `base ${color}${active ? " active" : ""}`);
    cell.style.gridColumn = `span ${a}`;
    cell.style.gridRow = `span ${a}`;
    cell.textContent = String(count);
    cell.title = `${color} base: ${count} pawns inside`;
    cell.addEventListener("click", () =>
      color === "white" ? this.callbacks.onWhiteBase() : this.callbacks.onBlackBase(),
    );
    return cell;
  }

  private renderStats(view: ViewState): void {
    if (!view.stats.length) {
      this.statsBox.textContent = "";
      return;
    }
    const rows = view.stats
      .map(
        (r) =>
          `<tr><td>${r.batch}</td><td>${r.stage}</td><td>${r.stage_kind}</td>` +
          `<td>${r.games}</td><td>${r.white_wins}</td><td>${r.black_wins}</td>` +
          `<td>${r.aborted}</td></tr>`,
      )
      .join("");
    this.statsBox.innerHTML =
      "<table><thead><tr><th>batch</th><th>stage</th><th>kind</th>" +
      "<th>games</th><th>W</th><th>B</th><th>capped</th></tr></thead>" +
      `<tbody>${rows}</tbody></table>`;
  }
}

function markSuggestion(cell: HTMLElement, suggested: MoveJson | null, x: number, y: number): void {
  if (!suggested) {
    return;
  }
  if (suggested.dst && suggested.dst[0] === x && suggested.dst[1] === y) {
    cell.classList.add("hint-dst");
  }
  if (suggested.src && suggested.src[0] === x && suggested.src[1] === y) {
    cell.classList.add("hint-src");
  }
}

function markEngineMove(cell: HTMLElement, mv: MoveJson, x: number, y: number): void {
  if (mv.dst && mv.dst[0] === x && mv.dst[1] === y) {
    cell.classList.add("engine-dst");
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}
