"""HTTP/JSON play and analysis service.

Sessions persist as one JSON log document each, written atomically after
every event and replayed on startup, so a restart never loses a game.
Card payloads always carry both the card id and the feature vector; clients
never need group arithmetic.
"""

from __future__ import annotations

import json
import os
import sys
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import analysis, session as session_mod, variants
from .session import GameSession, RuleViolation, SessionError
from .variants import UnknownVariantError, VariantSpec

MAX_TRIALS = 10**7
MAX_BUDGET = 10**9


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: dict | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail or {}


class SessionStore:
    """Session registry with per-session locks and atomic JSON persistence."""

    def __init__(self, state_dir: Path):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self._sessions: dict[str, tuple[GameSession, threading.Lock]] = {}

    def recover(self) -> None:
        for path in sorted(self.state_dir.glob("*.json")):
            try:
                doc = json.loads(path.read_text())
                game = session_mod.from_persist_dict(doc)
            except Exception as exc:
                quarantine = path.with_suffix(".json.corrupt")
                path.rename(quarantine)
                print(
                    f"warning: quarantined corrupt session log {path.name}: {exc}",
                    file=sys.stderr,
                )
                continue
            self._sessions[game.session_id] = (game, threading.Lock())

    def add(self, game: GameSession) -> None:
        with self._registry_lock:
            self._sessions[game.session_id] = (game, threading.Lock())
        self.persist(game)

    def get(self, session_id: str) -> tuple[GameSession, threading.Lock]:
        with self._registry_lock:
            entry = self._sessions.get(session_id)
        if entry is None:
            raise ApiError(404, "not-found", f"no session {session_id!r}")
        return entry

    def persist(self, game: GameSession) -> None:
        path = self.state_dir / f"{game.session_id}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(game.to_persist_dict()))
        os.replace(tmp, path)

    def ids(self) -> list[str]:
        with self._registry_lock:
            return list(self._sessions)


# -- request bodies -----------------------------------------------------------

class CreateSessionBody(BaseModel):
    variant: str
    seed: int = 0
    players: list[str] = Field(min_length=1)
    mode: str = "free"
    table_size: int | None = None
    add_count: int | None = None


class ClaimBody(BaseModel):
    player: str
    cards: list[int]


class ProbabilityBody(BaseModel):
    variant: str
    table_size: int
    trials: int = Field(ge=1, le=MAX_TRIALS)
    seed: int = 0


class CapSearchBody(BaseModel):
    variant: str
    size: int
    budget: int = Field(default=10**6, ge=1, le=MAX_BUDGET)


# -- views --------------------------------------------------------------------

def _card_view(variant: VariantSpec, card_id: int) -> dict:
    return variants.card_to_jsonable(variants.build_deck(variant).card(card_id))


def _session_view(game: GameSession) -> dict:
    variant = game.variant
    return {
        "session_id": game.session_id,
        "variant": variant.id,
        "seed": game.seed,
        "mode": game.mode,
        "status": game.status,
        "players": [{"name": p, "score": game.scores[p]} for p in game.players],
        "table": [_card_view(variant, c) for c in game.table],
        "pile_count": len(game.draw_pile),
        "table_size": game.table_size,
        "add_count": game.add_count,
        "rule": variants.variant_to_jsonable(variant)["rule"],
        "event_count": len(game.event_log),
    }


def _lookup_variant(variant_id: str) -> VariantSpec:
    try:
        return variants.variant_by_id(variant_id)
    except UnknownVariantError:
        raise ApiError(404, "not-found", f"no variant {variant_id!r}")


def create_app(
    state_dir: str | Path = "groupset-state",
    analysis_workers: int = 2,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="groupset", version="0.1.0")
    store = SessionStore(Path(state_dir))
    store.recover()
    app.state.store = store
    analysis_slots = threading.BoundedSemaphore(analysis_workers)

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={
                "error": {"code": exc.code, "message": exc.message, "detail": exc.detail}
            },
        )

    @app.get("/variants")
    def list_variants():
        return {"variants": [variants.variant_to_jsonable(v) for v in variants.catalog()]}

    @app.get("/variants/{variant_id}/deck")
    def dump_deck(variant_id: str):
        variant = _lookup_variant(variant_id)
        deck = variants.build_deck(variant)
        return {
            "variant": variants.variant_to_jsonable(variant),
            "cards": [variants.card_to_jsonable(c) for c in deck.cards],
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        variant = _lookup_variant(body.variant)
        try:
            game = session_mod.new_session(
                variant,
                body.seed,
                body.players,
                mode=body.mode,
                table_size=body.table_size,
                add_count=body.add_count,
            )
        except SessionError as exc:
            raise ApiError(400, "bad-request", str(exc))
        store.add(game)
        return {"session": _session_view(game)}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        game, lock = store.get(session_id)
        with lock:
            return {"session": _session_view(game)}

    @app.post("/sessions/{session_id}/claims")
    def claim(session_id: str, body: ClaimBody):
        game, lock = store.get(session_id)
        with lock:
            try:
                result = game.claim_set(body.player, body.cards)
            except SessionError as exc:
                raise ApiError(400, "bad-request", str(exc))
            store.persist(game)
            if not result.accepted:
                raise ApiError(
                    409,
                    "rule-violation",
                    "claim rejected",
                    {"reason": result.reason, "reorder_hint": result.reorder_hint},
                )
            return {
                "result": {
                    "accepted": True,
                    "points": result.points,
                    "score": result.score,
                    "dealt": result.dealt,
                    "finished": result.finished,
                },
                "session": _session_view(game),
            }

    @app.post("/sessions/{session_id}/deal")
    def deal(session_id: str):
        game, lock = store.get(session_id)
        with lock:
            try:
                result = game.deal_extra()
            except RuleViolation as exc:
                raise ApiError(409, "conflict", str(exc), {"reason": exc.reason})
            except SessionError as exc:
                raise ApiError(409, "conflict", str(exc))
            store.persist(game)
            return {
                "result": {"dealt": result.dealt, "warning": result.warning},
                "session": _session_view(game),
            }

    @app.get("/sessions/{session_id}/hint")
    def hint(session_id: str):
        game, lock = store.get(session_id)
        with lock:
            found = game.hint()
            return {"hint": list(found) if found else None}

    @app.post("/analysis/probability")
    def probability(body: ProbabilityBody):
        variant = _lookup_variant(body.variant)
        with analysis_slots:
            try:
                estimate = analysis.set_probability(
                    variant, body.table_size, body.trials, body.seed
                )
            except analysis.AnalysisError as exc:
                raise ApiError(400, "bad-request", str(exc))
        return estimate.to_jsonable()

    @app.post("/analysis/cap-search")
    def cap_search(body: CapSearchBody):
        variant = _lookup_variant(body.variant)
        with analysis_slots:
            try:
                result = analysis.cap_search(variant, body.size, body.budget)
            except analysis.AnalysisError as exc:
                raise ApiError(400, "bad-request", str(exc))
        return result.to_jsonable()

    @app.get("/facts")
    def facts():
        with analysis_slots:
            return analysis.verify_paper_facts().to_jsonable()

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(
    port: int,
    state_dir: str | Path,
    host: str = "127.0.0.1",
    analysis_workers: int = 2,
    ui_dir: str | Path | None = None,
) -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(state_dir, analysis_workers=analysis_workers, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
