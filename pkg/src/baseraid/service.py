"""Local HTTP service for live human-vs-computer training sessions.

A session runs a whole plan on a worker thread. Automatic CC stages play
through on their own; whenever an HC stage with a "human" white seat needs
a move, the worker parks and the browser drives it through three calls:

    POST /sessions              -> start (or error if nothing interactive)
    GET  /sessions/{id}/state   -> board, legal moves, guidance, progress
    POST /sessions/{id}/moves   -> human move; reply carries the engine's
                                   answer and the new state

A rejected submission changes nothing server-side; the violated rule comes
back as the error code. One live session per plan at a time.
"""

from __future__ import annotations

import os
import threading
import uuid
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .agents import ScriptedPolicy, SessionCounters, scripted_move
from .errors import BaseraidError, IllegalMoveError, PlanError
from .game import (
    GameState, Move, apply_move, events_to_json, legal_moves, move_from_json,
    move_to_json,
)
from .harness import BatchSpec, StageSpec, StageStats, load_plan, run_plan

WAITING_HUMAN = "waiting_human"
WAITING_ENGINE = "waiting_engine"
FINISHED = "finished"

SUBMIT_TIMEOUT = 60.0  # seconds a submission waits for the engine's reply


class SessionClosed(Exception):
    pass


def _plan_has_interactive_stage(batches: list[BatchSpec]) -> bool:
    return any(
        stage.kind == "hc" and (stage.white_agent or {}).get("kind") == "human"
        for spec in batches
        for stage in spec.stages
    )


class Session:
    """One live run of a plan, serialized through a single worker thread."""

    def __init__(self, session_id: str, plan_key: str, batches: list[BatchSpec], out_dir: str):
        self.id = session_id
        self.plan_key = plan_key
        self._batches = batches
        self._out_dir = out_dir
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._closing = False
        self.error: Optional[str] = None

        self.pending = WAITING_ENGINE
        self.latest_state: Optional[GameState] = None
        self.turn_state: Optional[GameState] = None  # state awaiting the human
        self.guidance: Optional[ScriptedPolicy] = None
        self.counters = SessionCounters()
        self.progress = {
            "batch": None, "stage": None, "stage_kind": None,
            "game": None, "of": None, "stats": None,
        }
        self.stats_rows: list[dict] = []
        self._stage_stats: dict[tuple[str, int], dict] = {}
        # Moves and events of interactive games, in order; automatic CC
        # games are not recorded here.
        self.history: list[dict] = []
        self._in_interactive_game = False

        self._submitted: Optional[Move] = None
        self._exchange: list[dict] = []
        self._exchange_open = False
        self._exchange_ready = False
        self._exchange_payload: Optional[dict] = None

        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    # --- worker side ----------------------------------------------------

    def _run(self) -> None:
        try:
            run_plan(
                self._batches, self._out_dir,
                human_provider=self._provide_move,
                observer=self._on_move,
                on_game_start=self._on_game_start,
                on_game_end=self._on_game_end,
            )
            with self._cond:
                self._finish_locked(None)
        except SessionClosed:
            pass
        except BaseraidError as exc:
            with self._cond:
                self._finish_locked(f"{type(exc).__name__}: {exc}")
        except Exception as exc:  # keep the API responsive on any failure
            with self._cond:
                self._finish_locked(f"internal error: {exc}")

    def _finish_locked(self, error: Optional[str]) -> None:
        self.pending = FINISHED
        self.error = error
        self.turn_state = None
        if self._exchange_open:
            self._close_exchange_locked()
        self._cond.notify_all()

    def _close_exchange_locked(self) -> None:
        self._exchange_open = False
        self._exchange_ready = True
        self._exchange_payload = self._state_payload_locked()
        self._cond.notify_all()

    def _provide_move(self, state: GameState) -> Move:
        with self._cond:
            self.turn_state = state
            self.latest_state = state
            self.pending = WAITING_HUMAN
            self._in_interactive_game = True
            if self._exchange_open:
                self._close_exchange_locked()
            self._cond.notify_all()
            while self._submitted is None:
                if self._closing:
                    raise SessionClosed()
                self._cond.wait(0.5)
            mv = self._submitted
            self._submitted = None
            self.turn_state = None
            self.pending = WAITING_ENGINE
            self._exchange = []
            self._exchange_open = True
            return mv

    def _on_move(self, before: GameState, mv: Move, events, after: GameState) -> None:
        with self._cond:
            self.latest_state = after
            entry = {"move": move_to_json(mv), "events": events_to_json(events)}
            if self._in_interactive_game:
                self.history.append(entry)
            if self._exchange_open:
                self._exchange.append(entry)

    def _on_game_start(self, spec: BatchSpec, stage_no: int, stage: StageSpec,
                       game_no: int, stats: StageStats) -> None:
        with self._cond:
            if game_no == 1:
                self.counters = SessionCounters()
                agent = stage.white_agent or {}
                if stage.kind == "hc" and agent.get("kind") == "human" and agent.get("policy"):
                    self.guidance = ScriptedPolicy(agent["policy"])
                else:
                    self.guidance = None
            self.progress = {
                "batch": spec.id, "stage": stage_no, "stage_kind": stage.kind,
                "game": game_no, "of": stage.games, "stats": _stats_json(stats),
            }

    def _on_game_end(self, spec: BatchSpec, stage_no: int, stage: StageSpec,
                     game_no: int, record, stats: StageStats) -> None:
        with self._cond:
            self._in_interactive_game = False
            self.counters.games_played += 1
            if record.result == "black":
                self.counters.black_wins += 1
            elif record.result == "white":
                self.counters.white_wins += 1
            row = {
                "batch": spec.id, "stage": stage_no, "stage_kind": stage.kind,
                **_stats_json(stats),
            }
            self._stage_stats[(spec.id, stage_no)] = row
            self.stats_rows = list(self._stage_stats.values())
            self.progress = {
                "batch": spec.id, "stage": stage_no, "stage_kind": stage.kind,
                "game": game_no, "of": stage.games, "stats": _stats_json(stats),
            }
            if self._exchange_open:
                self._close_exchange_locked()

    # --- API side ---------------------------------------------------------

    def _state_payload_locked(self) -> dict:
        state = self.turn_state if self.turn_state is not None else self.latest_state
        payload: dict = {
            "pending": self.pending,
            "progress": dict(self.progress),
            "error": self.error,
            "legal": [],
            "suggested": None,
            "guidance": None,
        }
        if state is None:
            payload["board"] = None
            return payload
        n = state.config.n
        squares = [["empty"] * n for _ in range(n)]
        for (x, y) in state.white:
            squares[y][x] = "white"
        for (x, y) in state.black:
            squares[y][x] = "black"
        payload.update({
            "board": {"n": n, "a": state.config.a, "beta": state.config.beta},
            "squares": squares,
            "base_counts": {"white": state.base_white, "black": state.base_black},
            "to_move": state.to_move.value,
            "ply": state.ply,
            "status": state.status.value,
            "winner": state.winner.value if state.winner else None,
        })
        if self.pending == WAITING_HUMAN and self.turn_state is not None:
            payload["legal"] = [move_to_json(m) for m in legal_moves(self.turn_state)]
            if self.guidance is not None:
                payload["guidance"] = self.guidance.kind
                payload["suggested"] = move_to_json(
                    scripted_move(self.guidance, self.turn_state, self.counters)
                )
        return payload

    def state_payload(self) -> dict:
        with self._cond:
            return self._state_payload_locked()

    def stats_payload(self) -> dict:
        with self._cond:
            return {"rows": list(self.stats_rows)}

    def submit(self, mv: Move) -> dict:
        with self._cond:
            if self.pending != WAITING_HUMAN or self.turn_state is None:
                raise HTTPException(status_code=409, detail="not waiting for a human move")
            try:
                apply_move(self.turn_state, mv)  # pure validation; result discarded
            except IllegalMoveError as exc:
                raise HTTPException(status_code=422, detail=exc.reason)
            self._submitted = mv
            self._exchange_ready = False
            self._exchange_payload = None
            self.pending = WAITING_ENGINE
            self._cond.notify_all()
            deadline = SUBMIT_TIMEOUT
            waited = 0.0
            while not self._exchange_ready:
                if self.error is not None:
                    raise HTTPException(status_code=500, detail=self.error)
                if waited >= deadline:
                    raise HTTPException(status_code=500, detail="engine reply timed out")
                self._cond.wait(0.5)
                waited += 0.5
            exchange = self._exchange
            human = exchange[0] if exchange else None
            engine = exchange[1] if len(exchange) > 1 else None
            return {
                "human_events": human["events"] if human else None,
                "engine_move": engine["move"] if engine else None,
                "engine_events": engine["events"] if engine else None,
                "state": self._exchange_payload,
            }

    def close(self) -> None:
        with self._cond:
            self._closing = True
            self._cond.notify_all()

    @property
    def finished(self) -> bool:
        with self._cond:
            return self.pending == FINISHED


def _stats_json(stats: StageStats) -> dict:
    return {
        "games": stats.games_played,
        "white_wins": stats.white_wins,
        "black_wins": stats.black_wins,
        "aborted": stats.aborted,
        "avg_plies_white_wins": stats.avg_plies_white_wins,
        "avg_plies_black_wins": stats.avg_plies_black_wins,
    }


def create_app(plan_path: Optional[str] = None, out_dir: str = "runs",
               ui_dir: Optional[str] = None) -> FastAPI:
    """Build the service; ``plan_path`` is the default plan for sessions."""
    from contextlib import asynccontextmanager

    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        with registry_lock:
            for session in set(sessions.values()):
                session.close()

    app = FastAPI(title="baseraid service", lifespan=lifespan)

    def _resolve_plan(ref: Optional[str]) -> str:
        if ref in (None, "", "default") and plan_path:
            return plan_path
        if ref and os.path.exists(ref):
            return ref
        if ref and plan_path and ref == os.path.basename(plan_path):
            return plan_path
        raise HTTPException(status_code=404, detail=f"unknown plan {ref!r}")

    @app.post("/sessions")
    def create_session(body: Optional[dict] = None):
        ref = (body or {}).get("plan")
        path = _resolve_plan(ref)
        try:
            batches = load_plan(path)
        except (PlanError, OSError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if not _plan_has_interactive_stage(batches):
            raise HTTPException(status_code=400, detail="plan has no interactive stage")
        with registry_lock:
            live = sessions.get(path)
            if live is not None and not live.finished:
                raise HTTPException(
                    status_code=409, detail="a live session already exists for this plan"
                )
            session = Session(uuid.uuid4().hex[:12], path, batches, out_dir)
            sessions[path] = session
            sessions[session.id] = session
        return {"session_id": session.id}

    def _get_session(sid: str) -> Session:
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.get("/sessions/{sid}/state")
    def get_state(sid: str):
        return _get_session(sid).state_payload()

    @app.post("/sessions/{sid}/moves")
    def post_move(sid: str, body: dict):
        session = _get_session(sid)
        try:
            mv = move_from_json(body)
        except (ValueError, KeyError, TypeError):
            raise HTTPException(status_code=422, detail="malformed move")
        return session.submit(mv)

    @app.get("/sessions/{sid}/stats")
    def get_stats(sid: str):
        return _get_session(sid).stats_payload()

    @app.exception_handler(HTTPException)
    async def http_error(request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": exc.detail})

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
