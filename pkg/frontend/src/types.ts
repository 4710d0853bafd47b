// Wire types mirroring the service's JSON payloads.

export type Cell = "empty" | "white" | "black";

export interface MoveJson {
  kind: "exit" | "step" | "enter";
  src?: [number, number];
  dst?: [number, number];
}

export interface StageStatsJson {
  games: number;
  white_wins: number;
  black_wins: number;
  aborted: number;
  avg_plies_white_wins: number | null;
  avg_plies_black_wins: number | null;
}

export interface ProgressJson {
  batch: string | null;
  stage: number | null;
  stage_kind: string | null;
  game: number | null;
  of: number | null;
  stats: StageStatsJson | null;
}

export interface StatePayload {
  pending: "waiting_human" | "waiting_engine" | "finished";
  progress: ProgressJson;
  error: string | null;
  legal: MoveJson[];
  suggested: MoveJson | null;
  guidance?: string | null; // bound policy name, e.g. "p1"
  board: { n: number; a: number; beta: number } | null;
  squares?: Cell[][]; // squares[y][x]
  base_counts?: { white: number; black: number };
  to_move?: "white" | "black";
  ply?: number;
  status?: "ongoing" | "won" | "aborted";
  winner?: "white" | "black" | null;
}

export interface SubmitResponse {
  human_events: unknown;
  engine_move: MoveJson | null;
  engine_events: unknown;
  state: StatePayload;
}

export interface StatsRowJson extends StageStatsJson {
  batch: string;
  stage: number;
  stage_kind: string;
}
