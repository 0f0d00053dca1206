"""Seeded, replayable game sessions.

A session is an event-sourced state machine: the shuffled pile is a pure
function of (variant, seed), every mutation appends an event, and replaying
the event log from the same (variant, seed) reproduces the exact state.
The persisted form is the log plus the creation parameters; derived state
(pile, table, scores) is never trusted from disk.
"""

from __future__ import annotations

import itertools
import json
import secrets
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import analysis, groups, rules, variants
from .rng import Stream
from .rules import ProductIdentity
from .variants import VariantSpec


class SessionError(Exception):
    """Structural misuse: unknown ids, bad players, finished sessions."""


class DivergenceError(SessionError):
    """An event in a replayed log cannot have happened; carries the seq."""

    def __init__(self, seq: int, message: str):
        super().__init__(f"event {seq}: {message}")
        self.seq = seq


class RuleViolation(SessionError):
    """A game-level rejection that is not recorded as an event (extra deals)."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str  # dealt | claim-accepted | claim-rejected | extra-dealt | finished
    at: int  # milliseconds since the epoch
    payload: dict[str, Any]

    def to_jsonable(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "at": self.at, **self.payload}

    @staticmethod
    def from_jsonable(data: dict) -> "Event":
        payload = {k: v for k, v in data.items() if k not in ("seq", "kind", "at")}
        return Event(seq=data["seq"], kind=data["kind"], at=data["at"], payload=payload)


@dataclass
class ClaimResult:
    accepted: bool
    reason: str | None = None
    reorder_hint: bool | None = None
    points: int = 0
    score: int | None = None
    dealt: list[int] = field(default_factory=list)
    finished: bool = False


@dataclass
class DealResult:
    dealt: list[int]
    warning: str | None = None


_REJECTION_REASONS = ("wrong-arity", "not-a-set", "cards-not-on-table")


def _now_ms() -> int:
    return int(time.time() * 1000)


class GameSession:
    """One live game. All mutations go through claim_set / deal_extra."""

    def __init__(
        self,
        variant: VariantSpec,
        seed: int,
        players: Sequence[str],
        mode: str = "free",
        table_size: int | None = None,
        add_count: int | None = None,
        session_id: str | None = None,
    ):
        if not players:
            raise SessionError("need at least one player")
        if len(set(players)) != len(players):
            raise SessionError("player names must be distinct")
        if mode not in ("free", "strict"):
            raise SessionError("mode must be 'free' or 'strict'")
        self.variant = variant
        self.seed = seed
        self.players = list(players)
        self.mode = mode
        self.table_size = variant.table_size if table_size is None else table_size
        self.add_count = variant.add_count if add_count is None else add_count
        if self.table_size < 1 or self.add_count < 1:
            raise SessionError("table size and add count must be positive")
        self.session_id = session_id or f"s-{secrets.token_urlsafe(9)}"
        self.scores: dict[str, int] = {p: 0 for p in self.players}
        self.table: list[int] = []
        self.claimed: list[int] = []
        self.event_log: list[Event] = []
        self.status = "active"

        deck_ids = list(range(variant.deck_size))
        Stream(seed, 0).shuffle(deck_ids)
        self.draw_pile: list[int] = deck_ids

    # -- log primitives ---------------------------------------------------

    def _append(self, kind: str, payload: dict, at: int | None = None) -> Event:
        event = Event(len(self.event_log), kind, _now_ms() if at is None else at, payload)
        self.event_log.append(event)
        return event

    def _draw(self, count: int) -> list[int]:
        taken = self.draw_pile[:count]
        del self.draw_pile[:count]
        self.table.extend(taken)
        return taken

    def _deal_initial(self, at: int | None = None) -> list[int]:
        cards = self._draw(min(self.table_size, len(self.draw_pile)))
        self._append("dealt", {"cards": list(cards)}, at)
        return cards

    def _maybe_finish(self, at: int | None = None) -> bool:
        if self.status == "finished":
            return True
        if not self.draw_pile and self.hint() is None:
            self._append("finished", {}, at)
            self.status = "finished"
            return True
        return False

    # -- queries ------------------------------------------------------------

    def hint(self) -> tuple[int, ...] | None:
        """First set on the table in canonical order, or None. Pure."""
        return analysis.first_set(self.variant, self.table)

    def table_has_set(self) -> bool:
        return analysis.has_set(self.variant, self.table)

    # -- claim handling -------------------------------------------------------

    def _classify_claim(self, cards: list[int]) -> str | None:
        """Rejection reason for the ordered claim, or None when it is a set."""
        if any(c not in self.table for c in cards):
            return "cards-not-on-table"
        arity = rules.rule_arity(self.variant.rule)
        if arity is not None:
            if len(cards) != arity:
                return "wrong-arity"
        elif len(cards) < rules.ANY_MIN_SIZE:
            return "wrong-arity"
        elems = [variants.element_of_card(self.variant, c) for c in cards]
        if not rules.is_set(self.variant.rule, self.variant.group, elems):
            return "not-a-set"
        return None

    def _claim_points(self, cards: list[int]) -> int:
        rule = self.variant.rule
        if isinstance(rule, ProductIdentity) and rule.size is None:
            return len(cards)
        return 1

    def claim_set(self, player: str, cards: Sequence[int], at: int | None = None) -> ClaimResult:
        if self.status != "active":
            raise SessionError("session is finished")
        if player not in self.scores:
            raise SessionError(f"unknown player {player!r}")
        cards = list(cards)
        if len(set(cards)) != len(cards):
            raise SessionError("claim repeats a card")
        for c in cards:
            if not 0 <= c < self.variant.deck_size:
                raise SessionError(f"unknown card id {c}")
        reason = self._classify_claim(cards)
        if reason is not None:
            self._append(
                "claim-rejected",
                {"player": player, "cards": cards, "reason": reason},
                at,
            )
            hint_flag = None
            if reason == "not-a-set":
                hint_flag = _reorder_would_work(self.variant, cards)
            return ClaimResult(False, reason=reason, reorder_hint=hint_flag)
        points = self._claim_points(cards)
        self.scores[player] += points
        for c in cards:
            self.table.remove(c)
        self.claimed.extend(cards)
        need = max(0, self.table_size - len(self.table))
        dealt = self._draw(min(need, len(self.draw_pile)))
        self._append("claim-accepted", {"player": player, "cards": cards}, at)
        finished = self._maybe_finish(at)
        return ClaimResult(
            True,
            points=points,
            score=self.scores[player],
            dealt=dealt,
            finished=finished,
        )

    # -- extra deals --------------------------------------------------------

    def deal_extra(self, at: int | None = None) -> DealResult:
        if self.status != "active":
            raise SessionError("session is finished")
        if not self.draw_pile:
            raise RuleViolation("pile-empty", "the draw pile is empty")
        if (
            isinstance(self.variant.rule, ProductIdentity)
            and self.variant.rule.size is None
        ):
            # keep any-size tables inside the exactly-searchable range
            cap = (
                analysis.ANY_TABLE_CAP
                if groups.is_abelian(self.variant.group)
                else analysis.ORDERED_ANY_FIRST_CAP
            )
            if len(self.table) + self.add_count > cap:
                raise RuleViolation(
                    "table-full", f"this rule caps the table at {cap} cards"
                )
        if self.mode == "strict" and self.table_has_set():
            raise RuleViolation(
                "set-on-table", "strict sessions only deal when no set is present"
            )
        count = min(self.add_count, len(self.draw_pile))
        dealt = self._draw(count)
        self._append("extra-dealt", {"count": count}, at)
        self._maybe_finish(at)
        warning = None
        if self.add_count == 1:
            warning = (
                "adding a single card means any new set must contain it, "
                "which makes sets much easier to find"
            )
        return DealResult(dealt=dealt, warning=warning)

    # -- serialization --------------------------------------------------------

    def to_persist_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "variant": self.variant.id,
            "seed": self.seed,
            "players": list(self.players),
            "mode": self.mode,
            "table_size": self.table_size,
            "add_count": self.add_count,
            "event_log": [e.to_jsonable() for e in self.event_log],
        }

    def state_snapshot(self) -> dict:
        return {
            **self.to_persist_dict(),
            "status": self.status,
            "draw_pile": list(self.draw_pile),
            "table": list(self.table),
            "claimed": list(self.claimed),
            "scores": dict(sorted(self.scores.items())),
        }

    def snapshot_bytes(self) -> bytes:
        return json.dumps(self.state_snapshot(), sort_keys=True).encode()

    def check_conservation(self) -> None:
        deck = set(range(self.variant.deck_size))
        pile, table, claimed = set(self.draw_pile), set(self.table), set(self.claimed)
        total = len(self.draw_pile) + len(self.table) + len(self.claimed)
        if pile | table | claimed != deck or total != len(deck):
            raise SessionError("card conservation violated")


def _reorder_would_work(variant: VariantSpec, cards: list[int]) -> bool | None:
    """Would some other ordering of exactly these cards be a set?

    None means "unknown" (too many cards to decide cheaply).
    """
    spec = variant.group
    if not rules.rule_is_ordered(variant.rule, spec):
        return False
    elems = [variants.element_of_card(variant, c) for c in cards]
    if len(elems) <= 6:
        return any(
            rules.is_set(variant.rule, spec, perm)
            for perm in itertools.permutations(elems)
        )
    if groups.order(spec) > groups.TABLE_CAP or len(elems) > 14:
        return None
    mul = groups.multiplication_table(spec)
    # subset-product DP: reachable products over all orderings of each subset
    reach_by_mask: dict[int, set[int]] = {0: {0}}
    m = len(elems)
    for mask in range(1, 1 << m):
        acc: set[int] = set()
        rest = mask
        while rest:
            bit = rest & -rest
            x = bit.bit_length() - 1
            rest ^= bit
            for p in reach_by_mask[mask ^ bit]:
                acc.add(int(mul[p, elems[x].index]))
        reach_by_mask[mask] = acc
    return 0 in reach_by_mask[(1 << m) - 1]


def new_session(
    variant: VariantSpec,
    seed: int,
    players: Sequence[str],
    mode: str = "free",
    table_size: int | None = None,
    add_count: int | None = None,
    session_id: str | None = None,
) -> GameSession:
    """Create a session, shuffle, deal the opening table."""
    session = GameSession(
        variant, seed, players, mode=mode, table_size=table_size,
        add_count=add_count, session_id=session_id,
    )
    session._deal_initial()
    session._maybe_finish()
    return session


def replay(
    variant: VariantSpec,
    seed: int,
    event_log: Sequence[Event | dict],
    players: Sequence[str],
    mode: str = "free",
    table_size: int | None = None,
    add_count: int | None = None,
    session_id: str | None = None,
) -> GameSession:
    """Rebuild a session from its log, verifying every event against the
    deterministic recomputation; tampered logs raise DivergenceError."""
    events = [
        e if isinstance(e, Event) else Event.from_jsonable(e) for e in event_log
    ]
    session = GameSession(
        variant, seed, players, mode=mode, table_size=table_size,
        add_count=add_count, session_id=session_id,
    )
    for i, event in enumerate(events):
        if event.seq != i:
            raise DivergenceError(event.seq, f"sequence numbers not contiguous at {i}")
        try:
            _replay_event(session, event)
        except DivergenceError:
            raise
        except (SessionError, rules.RuleError, ValueError) as exc:
            raise DivergenceError(event.seq, str(exc)) from exc
    return session


def _replay_event(session: GameSession, event: Event) -> None:
    kind = event.kind
    if kind == "dealt":
        if event.seq != 0:
            raise DivergenceError(event.seq, "initial deal must be the first event")
        dealt = session._deal_initial(at=event.at)
        if dealt != list(event.payload.get("cards", [])):
            raise DivergenceError(event.seq, "dealt cards do not match the shuffle")
        if session._maybe_finish(at=event.at):
            return
        return
    if kind == "claim-accepted":
        result = session.claim_set(
            event.payload["player"], event.payload["cards"], at=event.at
        )
        if not result.accepted:
            raise DivergenceError(
                event.seq, f"log marks an invalid claim accepted ({result.reason})"
            )
        # claim_set appended claim-accepted (and possibly finished); verify tail
        appended = [e for e in session.event_log if e.seq >= event.seq]
        if appended[0].kind != "claim-accepted":
            raise DivergenceError(event.seq, "event kind mismatch")
        return
    if kind == "claim-rejected":
        result = session.claim_set(
            event.payload["player"], event.payload["cards"], at=event.at
        )
        if result.accepted:
            raise DivergenceError(event.seq, "log marks a valid claim rejected")
        if result.reason != event.payload.get("reason"):
            raise DivergenceError(
                event.seq,
                f"rejection reason mismatch: {result.reason} vs "
                f"{event.payload.get('reason')}",
            )
        return
    if kind == "extra-dealt":
        result = session.deal_extra(at=event.at)
        if len(result.dealt) != event.payload.get("count"):
            raise DivergenceError(event.seq, "extra deal count mismatch")
        return
    if kind == "finished":
        # finish events are emitted by the preceding operation; verify, then
        # restore the logged timestamp (live finishes stamp their own clock)
        if (
            not session.event_log
            or session.event_log[-1].seq < event.seq
            or session.event_log[event.seq].kind != "finished"
        ):
            raise DivergenceError(event.seq, "finish event does not follow from play")
        session.event_log[event.seq] = Event(event.seq, "finished", event.at, {})
        return
    raise DivergenceError(event.seq, f"unknown event kind {kind!r}")


def from_persist_dict(doc: dict) -> GameSession:
    variant = variants.variant_by_id(doc["variant"])
    return replay(
        variant,
        doc["seed"],
        doc["event_log"],
        doc["players"],
        mode=doc.get("mode", "free"),
        table_size=doc.get("table_size"),
        add_count=doc.get("add_count"),
        session_id=doc.get("session_id"),
    )
