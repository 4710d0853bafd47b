// Pure view-state logic: selection, legal-move filtering, move lookup.
// Everything here is driven by the served legal list; the client never
// invents a move the server did not offer.

import type { MoveJson, StatePayload } from "./types.js";

export type Selection =
  | { kind: "base" }
  | { kind: "pawn"; x: number; y: number }
  | null;

export interface Highlights {
  destinations: [number, number][];
  enterAvailable: boolean; // the selected pawn may enter the enemy base
}

const NO_HIGHLIGHTS: Highlights = { destinations: [], enterAvailable: false };

export function sameSquare(a: [number, number] | undefined, x: number, y: number): boolean {
  return !!a && a[0] === x && a[1] === y;
}

/** Destinations of the served legal moves filtered by the selection. */
export function computeHighlights(legal: MoveJson[], selection: Selection): Highlights {
  if (!selection) {
    return NO_HIGHLIGHTS;
  }
  const destinations: [number, number][] = [];
  let enterAvailable = false;
  for (const mv of legal) {
    if (selection.kind === "base") {
      if (mv.kind === "exit" && mv.dst) {
        destinations.push(mv.dst);
      }
    } else if (mv.kind === "step" && sameSquare(mv.src, selection.x, selection.y) && mv.dst) {
      destinations.push(mv.dst);
    } else if (mv.kind === "enter" && sameSquare(mv.src, selection.x, selection.y)) {
      enterAvailable = true;
    }
  }
  return { destinations, enterAvailable };
}

/** The served move matching (selection, clicked destination), if any. */
export function lookupMove(
  legal: MoveJson[],
  selection: Selection,
  x: number,
  y: number,
): MoveJson | null {
  if (!selection) {
    return null;
  }
  for (const mv of legal) {
    if (selection.kind === "base") {
      if (mv.kind === "exit" && sameSquare(mv.dst, x, y)) {
        return mv;
      }
    } else if (
      mv.kind === "step" &&
      sameSquare(mv.src, selection.x, selection.y) &&
      sameSquare(mv.dst, x, y)
    ) {
      return mv;
    }
  }
  return null;
}

/** The served enter move for the selected pawn, if any. */
export function lookupEnter(legal: MoveJson[], selection: Selection): MoveJson | null {
  if (!selection || selection.kind !== "pawn") {
    return null;
  }
  for (const mv of legal) {
    if (mv.kind === "enter" && sameSquare(mv.src, selection.x, selection.y)) {
      return mv;
    }
  }
  return null;
}

export function inWhiteBase(n: number, a: number, x: number, y: number): boolean {
  return x < a && y < a;
}

export function inBlackBase(n: number, a: number, x: number, y: number): boolean {
  return x >= n - a && y >= n - a;
}

export function describeMove(mv: MoveJson | null): string {
  if (!mv) {
    return "-";
  }
  if (mv.kind === "exit") {
    return `exit to (${mv.dst![0]}, ${mv.dst![1]})`;
  }
  if (mv.kind === "step") {
    return `(${mv.src![0]}, ${mv.src![1]}) to (${mv.dst![0]}, ${mv.dst![1]})`;
  }
  return `enter from (${mv.src![0]}, ${mv.src![1]})`;
}

export function progressLabel(payload: StatePayload | null): string {
  const p = payload?.progress;
  if (!p || p.batch == null) {
    return "starting";
  }
  const head = `${p.batch} stage ${p.stage} (${(p.stage_kind ?? "").toUpperCase()})`;
  if (p.game != null && p.of != null) {
    return `${head} game ${p.game} of ${p.of}`;
  }
  return head;
}

export function statsLabel(payload: StatePayload | null): string {
  const s = payload?.progress?.stats;
  if (!s) {
    return "";
  }
  return `W ${s.white_wins} / B ${s.black_wins}` + (s.aborted ? ` / ${s.aborted} capped` : "");
}

/** Guidance hint text, advisory only; empty when no policy is bound. */
export function hintLabel(payload: StatePayload | null): string {
  if (!payload?.suggested || payload.pending !== "waiting_human") {
    return "";
  }
  const policy = payload.guidance ? payload.guidance.toUpperCase() : "guide";
  return `${policy}: ${describeMove(payload.suggested)}`;
}
