// Session controller: polling, selection, submission, error surfaces.
// Holds no DOM references; a render callback receives every view change,
// which is what makes the full flow drivable headlessly in tests.

import { ApiError, Transport } from "./api.js";
import {
  Highlights, Selection, computeHighlights, lookupEnter, lookupMove,
} from "./model.js";
import type { MoveJson, StatePayload, StatsRowJson } from "./types.js";

export interface ViewState {
  sessionId: string | null;
  payload: StatePayload | null;
  selection: Selection;
  highlights: Highlights;
  lastEngineMove: MoveJson | null;
  notice: string | null; // rule violations, conflicts, network trouble
  canRetry: boolean; // a network failure left an action retryable
  stats: StatsRowJson[];
  busy: boolean;
}

const EMPTY_HIGHLIGHTS: Highlights = { destinations: [], enterAvailable: false };

export class GameController {
  view: ViewState = {
    sessionId: null,
    payload: null,
    selection: null,
    highlights: EMPTY_HIGHLIGHTS,
    lastEngineMove: null,
    notice: null,
    canRetry: false,
    stats: [],
    busy: false,
  };

  private timer: ReturnType<typeof setInterval> | null = null;
  private pendingMove: MoveJson | null = null;

  constructor(
    private transport: Transport,
    private render: (view: ViewState) => void,
    private pollMs = 500,
  ) {}

  private emit(): void {
    this.render(this.view);
  }

  async start(plan?: string): Promise<void> {
    try {
      this.view.sessionId = await this.transport.createSession(plan);
      this.view.notice = null;
    } catch (err) {
      this.view.notice = describeError(err);
      this.view.canRetry = true;
      this.emit();
      return;
    }
    await this.refresh();
    this.startPolling();
  }

  startPolling(): void {
    if (this.timer === null) {
      this.timer = setInterval(() => {
        void this.refresh();
      }, this.pollMs);
    }
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** Fetch the server state and re-derive everything local from it. */
  async refresh(): Promise<void> {
    if (!this.view.sessionId || this.view.busy) {
      return;
    }
    try {
      const payload = await this.transport.getState(this.view.sessionId);
      this.applyPayload(payload);
      this.view.stats = await this.transport.getStats(this.view.sessionId);
      if (payload.pending === "finished") {
        this.stopPolling();
      }
    } catch (err) {
      this.view.notice = describeError(err);
      this.view.canRetry = true;
    }
    this.emit();
  }

  private applyPayload(payload: StatePayload): void {
    this.view.payload = payload;
    this.view.canRetry = false;
    if (payload.pending !== "waiting_human") {
      this.view.selection = null;
    }
    this.syncHighlights();
  }

  private syncHighlights(): void {
    const legal = this.view.payload?.legal ?? [];
    this.view.highlights = computeHighlights(legal, this.view.selection);
  }

  select(selection: Selection): void {
    this.view.selection = selection;
    this.syncHighlights();
    this.emit();
  }

  /**
   * Click routing: pick up an own pawn or the base, or, with something
   * selected, submit the served move for the clicked destination.
   */
  async clickSquare(x: number, y: number): Promise<void> {
    const payload = this.view.payload;
    if (!payload || payload.pending !== "waiting_human" || !payload.squares) {
      return;
    }
    const legal = payload.legal;
    const move = lookupMove(legal, this.view.selection, x, y);
    if (move) {
      await this.submit(move);
      return;
    }
    if (payload.squares[y]?.[x] === "white") {
      this.select({ kind: "pawn", x, y });
      return;
    }
    this.select(null);
  }

  async clickWhiteBase(): Promise<void> {
    if (this.view.payload?.pending === "waiting_human") {
      this.select({ kind: "base" });
    }
  }

  /** Entering the enemy base: only offered when the served list has it. */
  async clickBlackBase(): Promise<void> {
    const legal = this.view.payload?.legal ?? [];
    const enter = lookupEnter(legal, this.view.selection);
    if (enter) {
      await this.submit(enter);
    }
  }

  async submit(move: MoveJson): Promise<void> {
    if (!this.view.sessionId) {
      return;
    }
    this.view.busy = true;
    this.view.notice = null;
    this.pendingMove = move;
    this.emit();
    try {
      const result = await this.transport.submitMove(this.view.sessionId, move);
      this.pendingMove = null;
      this.view.lastEngineMove = result.engine_move;
      this.view.selection = null;
      this.applyPayload(result.state);
      this.view.busy = false;
      this.emit();
      this.view.stats = await this.transport.getStats(this.view.sessionId);
      this.emit();
    } catch (err) {
      this.view.busy = false;
      if (err instanceof ApiError && err.status === 422) {
        // Rule violation: board stays put, the reason is surfaced.
        this.pendingMove = null;
        this.view.notice = `rejected: ${err.code}`;
        this.emit();
      } else if (err instanceof ApiError && err.status === 409) {
        // Raced the engine; re-sync from the server.
        this.pendingMove = null;
        this.view.notice = "out of turn; refreshed";
        await this.refetchState();
      } else {
        // Network trouble: nothing changed server-side for certain, so
        // keep the move around and offer a retry.
        this.view.notice = describeError(err);
        this.view.canRetry = true;
        this.emit();
      }
    }
  }

  async retry(): Promise<void> {
    const move = this.pendingMove;
    this.view.canRetry = false;
    if (move) {
      this.pendingMove = null;
      await this.submit(move);
    } else {
      await this.refresh();
    }
  }

  private async refetchState(): Promise<void> {
    if (!this.view.sessionId) {
      return;
    }
    try {
      this.applyPayload(await this.transport.getState(this.view.sessionId));
    } catch (err) {
      this.view.notice = describeError(err);
      this.view.canRetry = true;
    }
    this.emit();
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return `server error ${err.status}: ${err.code}`;
  }
  return `network failure: ${err instanceof Error ? err.message : String(err)}`;
}
