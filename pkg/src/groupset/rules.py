"""Set predicates over group-valued cards.

Two rule families:

* ``ProductIdentity`` - an ordered tuple of cards is a set when the product
  of its elements (left to right) is the group identity. ``size=k`` demands
  exactly k cards; ``size=None`` accepts any size >= 3.
* ``ArithmeticProgression`` - three cards (a, b, c) form a set when the
  left differences agree: b.a^-1 = c.b^-1, i.e. c = b.a^-1.b.

Ordering only matters over non-abelian groups for product rules; it always
matters formally for progressions (though reversal is always valid too).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Literal, Sequence

import numpy as np

from . import groups
from .groups import Element, GroupSpec
from .rng import Stream

ANY_MIN_SIZE = 3


class RuleError(ValueError):
    """Invalid arguments to a rule predicate (arity, duplicates, ...)."""


@dataclass(frozen=True)
class ProductIdentity:
    """Cards multiply to the identity. size=None means any size >= 3."""

    size: int | None = None

    def __post_init__(self) -> None:
        if self.size is not None and self.size < 2:
            raise RuleError("fixed set size must be >= 2")


@dataclass(frozen=True)
class ArithmeticProgression:
    """Three cards with equal successive left differences."""


SetRule = ProductIdentity | ArithmeticProgression


def rule_arity(rule: SetRule) -> int | None:
    """Exact card count demanded by the rule, or None for any size >= 3."""
    if isinstance(rule, ArithmeticProgression):
        return 3
    return rule.size


def rule_is_ordered(rule: SetRule, spec: GroupSpec) -> bool:
    """Whether the claimed order of cards can affect the verdict."""
    if isinstance(rule, ArithmeticProgression):
        return True
    return not groups.is_abelian(spec)


def _check_cards(rule: SetRule, cards: Sequence[Element]) -> None:
    arity = rule_arity(rule)
    if arity is not None:
        if len(cards) != arity:
            raise RuleError(f"rule needs exactly {arity} cards, got {len(cards)}")
    elif len(cards) < ANY_MIN_SIZE:
        raise RuleError(f"rule needs at least {ANY_MIN_SIZE} cards, got {len(cards)}")
    if len({c.index for c in cards}) != len(cards):
        raise RuleError("duplicate cards")


def is_set(rule: SetRule, spec: GroupSpec, cards: Sequence[Element]) -> bool:
    """Test the ordered tuple of distinct cards against the rule."""
    _check_cards(rule, cards)
    if isinstance(rule, ArithmeticProgression):
        a, b, c = cards
        left = spec.compose_values(b.value, spec.inverse_value(a.value))
        right = spec.compose_values(c.value, spec.inverse_value(b.value))
        return left == right
    acc = spec.identity_value()
    for card in cards:
        acc = spec.compose_values(acc, card.value)
    return acc == spec.identity_value()


@dataclass(frozen=True)
class ApCompletion:
    card: Element
    degenerate: bool  # completion equals the first card (no usable third card)


def complete_ap(spec: GroupSpec, a: Element, b: Element) -> ApCompletion:
    """Third card c = b.a^-1.b; degenerate exactly when b.a^-1 has order 2."""
    if a == b:
        raise RuleError("progression completion needs two distinct cards")
    value = spec.compose_values(
        spec.compose_values(b.value, spec.inverse_value(a.value)), b.value
    )
    card = Element(value, spec.value_index(value))
    return ApCompletion(card, card == a)


def complete_product(
    spec: GroupSpec, cards: Sequence[Element], position: int
) -> Element:
    """The unique element making the ordered product the identity when
    inserted at ``position``. A pure solver: the caller decides whether a
    completion that duplicates a card (or the removed identity) is usable."""
    if not 0 <= position <= len(cards):
        raise RuleError("insertion position out of range")
    left = spec.identity_value()
    for card in cards[:position]:
        left = spec.compose_values(left, card.value)
    right = spec.identity_value()
    for card in cards[position:]:
        right = spec.compose_values(right, card.value)
    value = spec.compose_values(spec.inverse_value(left), spec.inverse_value(right))
    return Element(value, spec.value_index(value))


def involution_count(spec: GroupSpec) -> int:
    return sum(1 for v in spec.iter_values() if spec.element_order_value(v) == 2)


def completion_failure_rate(spec: GroupSpec) -> Fraction:
    """(order-2 elements) / group order: chance a random group element squares
    to the identity, the usual headline figure for progression dead-ends."""
    return Fraction(involution_count(spec), spec.order())


def ap_degenerate_pair_rate(spec: GroupSpec) -> Fraction:
    """(order-2 elements) / (order - 1): the rate of degenerate completions
    over ordered pairs with a != b, where b.a^-1 is never the identity."""
    return Fraction(involution_count(spec), spec.order() - 1)


# ---------------------------------------------------------------------------
# translation (torsor) invariance

@dataclass(frozen=True)
class TorsorCheck:
    invariant: bool
    mode: Literal["exhaustive", "sampled"]
    checks: int
    counterexample: tuple[int, tuple[int, ...]] | None  # (g index, tuple of element indices)


_SAMPLED_TUPLES = 10**5
_SAMPLE_SEED = 0x5E7CA2D5


def _tuple_arities(rule: SetRule) -> tuple[int, ...]:
    arity = rule_arity(rule)
    if arity is not None:
        return (arity,)
    return (3, 4)


def rule_is_torsor_invariant(
    rule: SetRule,
    spec: GroupSpec,
    side: Literal["left", "right"] = "left",
    exhaustive_budget: int = 3 * 10**7,
) -> TorsorCheck:
    """Does translating every card by the same g preserve the rule verdict?

    Quantifies over all value tuples *with repetition* (the per-attribute
    view of a card game, where one attribute may repeat across cards) and
    all translations g. Exhaustive when |G|^(arity+1) fits the budget,
    otherwise 10^5 seeded random (g, tuple) samples, reported as "sampled".
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    n = spec.order()
    arities = _tuple_arities(rule)
    total = sum(n ** (m + 1) for m in arities)
    if total <= exhaustive_budget and n <= groups.TABLE_CAP:
        return _torsor_exhaustive(rule, spec, side, arities)
    return _torsor_sampled(rule, spec, side, arities)


def _rule_ok_indices(rule: SetRule, mul: np.ndarray, inv: np.ndarray,
                     grids: list[np.ndarray]) -> np.ndarray:
    if isinstance(rule, ArithmeticProgression):
        a, b, c = grids
        return mul[b, inv[a]] == mul[c, inv[b]]
    acc = grids[0]
    for g in grids[1:]:
        acc = mul[acc, g]
    return acc == 0


def _torsor_exhaustive(rule, spec, side, arities) -> TorsorCheck:
    mul = groups.multiplication_table(spec)
    inv = groups.inverse_table(spec)
    n = spec.order()
    checks = 0
    for m in arities:
        grids = [g.ravel() for g in np.indices((n,) * m, dtype=mul.dtype)]
        base = _rule_ok_indices(rule, mul, inv, grids)
        for g in range(n):
            if side == "left":
                translated = [mul[g, x] for x in grids]
            else:
                translated = [mul[x, g] for x in grids]
            shifted = _rule_ok_indices(rule, mul, inv, translated)
            checks += base.size
            if not np.array_equal(base, shifted):
                bad = int(np.nonzero(base != shifted)[0][0])
                witness = tuple(int(x[bad]) for x in grids)
                return TorsorCheck(False, "exhaustive", checks, (g, witness))
    return TorsorCheck(True, "exhaustive", checks, None)


def _torsor_sampled(rule, spec, side, arities) -> TorsorCheck:
    stream = Stream(_SAMPLE_SEED)
    n = spec.order()
    elems = None
    if n <= 10**5:
        elems = groups.elements(spec)

    def elem(i: int) -> Element:
        if elems is not None:
            return elems[i]
        return groups.element_at(spec, i)

    checks = 0
    for _ in range(_SAMPLED_TUPLES):
        m = arities[stream.randbelow(len(arities))]
        idxs = tuple(stream.randbelow(n) for _ in range(m))
        g = elem(stream.randbelow(n))
        cards = [elem(i) for i in idxs]
        base = _raw_rule(rule, spec, cards)
        if side == "left":
            moved = [groups.compose(spec, g, c) for c in cards]
        else:
            moved = [groups.compose(spec, c, g) for c in cards]
        checks += 1
        if base != _raw_rule(rule, spec, moved):
            return TorsorCheck(False, "sampled", checks, (g.index, idxs))
    return TorsorCheck(True, "sampled", checks, None)


def _raw_rule(rule: SetRule, spec: GroupSpec, cards: Sequence[Element]) -> bool:
    """Rule predicate without the distinct-cards precondition."""
    if isinstance(rule, ArithmeticProgression):
        a, b, c = cards
        left = spec.compose_values(b.value, spec.inverse_value(a.value))
        right = spec.compose_values(c.value, spec.inverse_value(b.value))
        return left == right
    acc = spec.identity_value()
    for card in cards:
        acc = spec.compose_values(acc, card.value)
    return acc == spec.identity_value()


# ---------------------------------------------------------------------------
# residue multisets and feature-level predicates

def _check_multiset(values: Sequence[int], modulus: int) -> None:
    if modulus < 1:
        raise RuleError("modulus must be >= 1")
    if len(values) != modulus:
        raise RuleError(f"need exactly {modulus} values, got {len(values)}")
    if any(not 0 <= v < modulus for v in values):
        raise RuleError("values must lie in [0, modulus)")


def sum_zero(values: Sequence[int], modulus: int) -> bool:
    """Do the n residues sum to 0 mod n?"""
    _check_multiset(values, modulus)
    return sum(values) % modulus == 0


def pentagon_symmetry(values: Sequence[int], modulus: int) -> bool:
    """Is the residue multiset fixed by some reflection v -> (k - v) mod n?

    Vertex and edge-midpoint axes of the regular n-gon are both covered by
    letting k range over all residues.
    """
    _check_multiset(values, modulus)
    counts = Counter(v % modulus for v in values)
    for k in range(modulus):
        if all(counts[(k - v) % modulus] == c for v, c in counts.items()):
            return True
    return False


def feature_predicate_set(
    kind: Literal["set", "quads"], values: Sequence[Any]
) -> bool:
    """Per-feature card predicate: the classic triple rule or the quad rule.

    ``set``: 3 values from a 3-value domain, all same or all different.
    ``quads``: 4 values from a 4-value domain, all same, all different,
    or two pairs.
    """
    if kind == "set":
        if len(values) != 3:
            raise RuleError("set predicate needs exactly 3 values")
        distinct = len(set(values))
        return distinct in (1, 3)
    if kind == "quads":
        if len(values) != 4:
            raise RuleError("quads predicate needs exactly 4 values")
        counts = sorted(Counter(values).values())
        return counts in ([4], [1, 1, 1, 1], [2, 2])
    raise RuleError(f"unknown predicate kind {kind!r}")


def rule_to_jsonable(rule: SetRule) -> dict:
    if isinstance(rule, ArithmeticProgression):
        return {"kind": "arithmetic-progression"}
    return {"kind": "product-identity", "size": rule.size}


def rule_from_jsonable(data: dict) -> SetRule:
    if data.get("kind") == "arithmetic-progression":
        return ArithmeticProgression()
    if data.get("kind") == "product-identity":
        return ProductIdentity(data.get("size"))
    raise RuleError(f"unknown rule {data!r}")
