"""Catalog of playable variants, deck construction, and card feature schemes.

Every card carries a feature vector that is bijective with its group
element, so rendering never needs group arithmetic. Schemes:

* ``set4``       - four ternary attributes (count, shape, color, shading).
* ``socks6``     - subset of six sock colors (binary vector).
* ``quads3``     - three quaternary attributes (count, color, shape),
                   each attribute packing two binary dimensions.
* ``pentagons3`` - three pentagons with one marked direction each.
* ``octa``       - one octahedral-group element drawn two ways: a four-color
                   octahedron with a spiral parity, and a three-color cube
                   with per-color hollowness bits.
* ``permutation-wires`` - one or more wire panels (crossing strands with
                   optional beads), covering plain permutation groups,
                   their direct products, and bead wreaths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Any

from . import groups
from .dsl import parse_group_expr, print_group_expr
from .groups import Element, GroupSpec
from .rules import ArithmeticProgression, ProductIdentity, SetRule, rule_to_jsonable


class UnknownVariantError(KeyError):
    pass


@dataclass(frozen=True)
class VariantSpec:
    id: str
    display_name: str
    group: GroupSpec
    rule: SetRule
    include_identity: bool
    table_size: int
    add_count: int
    renderer: str

    @property
    def deck_size(self) -> int:
        return groups.order(self.group) - (0 if self.include_identity else 1)


@dataclass(frozen=True)
class FeatureVector:
    scheme: str
    values: dict[str, Any]


@dataclass(frozen=True)
class Card:
    card_id: int
    element: Element
    features: FeatureVector


@dataclass(frozen=True)
class Deck:
    variant_id: str
    cards: tuple[Card, ...]

    def card(self, card_id: int) -> Card:
        return self.cards[card_id]


def _variant(id, name, group, rule, include_identity, table_size, add_count, renderer):
    return VariantSpec(
        id=id,
        display_name=name,
        group=parse_group_expr(group),
        rule=rule,
        include_identity=include_identity,
        table_size=table_size,
        add_count=add_count,
        renderer=renderer,
    )


@lru_cache(maxsize=1)
def catalog() -> tuple[VariantSpec, ...]:
    """All built-in variants. Identity-including decks are torsor games."""
    return (
        _variant("classic-set", "SET", "C3^4", ProductIdentity(3), True, 12, 3, "set4"),
        _variant("proset", "ProSet / Socks", "C2^6", ProductIdentity(None), False, 7, 3, "socks6"),
        _variant("evenquads", "EvenQuads", "C2^6", ProductIdentity(4), True, 10, 4, "quads3"),
        _variant("c53t", "C53T", "C5^3", ProductIdentity(5), True, 12, 5, "pentagons3"),
        _variant("octa", "OCTA Set", "C2 x S4", ArithmeticProgression(), True, 12, 3, "octa"),
        _variant("a5set", "A5SET", "A5", ArithmeticProgression(), True, 12, 3, "permutation-wires"),
        _variant("nf-s3", "Numberphile S3", "S3", ProductIdentity(None), False, 5, 3, "permutation-wires"),
        _variant("nf-s4", "Numberphile S4", "S4", ProductIdentity(None), False, 12, 3, "permutation-wires"),
        _variant("nf-s3sq", "Numberphile S3 x S3", "S3^2", ProductIdentity(None), False, 12, 3, "permutation-wires"),
        _variant("nf-wreath", "Numberphile beads", "C2 wr S3", ProductIdentity(None), False, 12, 3, "permutation-wires"),
    )


def variant_by_id(variant_id: str) -> VariantSpec:
    for v in catalog():
        if v.id == variant_id:
            return v
    raise UnknownVariantError(variant_id)


def card_id_of_element(variant: VariantSpec, element: Element) -> int:
    """Stable card id: the element index, shifted down by one when the
    identity card is removed from the deck."""
    if variant.include_identity:
        return element.index
    if element.index == 0:
        raise ValueError("identity element carries no card id in this deck")
    return element.index - 1


def element_of_card(variant: VariantSpec, card_id: int) -> Element:
    if not 0 <= card_id < variant.deck_size:
        raise ValueError(f"card id {card_id} out of range for {variant.id}")
    shift = 0 if variant.include_identity else 1
    return groups.element_at(variant.group, card_id + shift)


@lru_cache(maxsize=32)
def build_deck(variant: VariantSpec) -> Deck:
    cards = []
    for element in groups.elements(variant.group):
        if not variant.include_identity and element.index == 0:
            continue
        cards.append(
            Card(
                card_id=card_id_of_element(variant, element),
                element=element,
                features=card_descriptor(variant, element),
            )
        )
    return Deck(variant.id, tuple(cards))


# ---------------------------------------------------------------------------
# feature schemes

SOCK_COLORS = ("red", "blue", "green", "yellow", "orange", "purple")
QUAD_COLORS = ("red", "yellow", "green", "blue")
QUAD_SHAPES = ("spiral", "polyhedron", "circle", "square")
SET_SHAPES = ("oval", "diamond", "squiggle")
SET_COLORS = ("red", "green", "purple")
SET_SHADINGS = ("solid", "striped", "empty")


def card_descriptor(variant: VariantSpec, element: Element) -> FeatureVector:
    """Scheme-tagged features for the element; invertible per scheme."""
    spec = variant.group
    scheme = variant.renderer
    if scheme == "set4":
        d = element.value
        return FeatureVector("set4", {
            "number": d[0] + 1,
            "shape": d[1],
            "color": d[2],
            "shading": d[3],
        })
    if scheme == "socks6":
        bits = element.value
        return FeatureVector("socks6", {
            "colors": [SOCK_COLORS[i] for i, b in enumerate(bits) if b],
        })
    if scheme == "quads3":
        bits = element.value
        attrs = [2 * bits[2 * j] + bits[2 * j + 1] for j in range(3)]
        return FeatureVector("quads3", {
            "count": attrs[0] + 1,
            "color": attrs[1],
            "shape": attrs[2],
        })
    if scheme == "pentagons3":
        return FeatureVector("pentagons3", {"directions": list(element.value)})
    if scheme == "octa":
        parity, perm = element.value
        beads, cube_perm = _octa_to_wreath(perm, parity)
        return FeatureVector("octa", {
            "spiral": parity,
            "octahedron_faces": list(perm),
            "cube_faces": list(cube_perm),
            "hollow": list(beads),
        })
    if scheme == "permutation-wires":
        return FeatureVector("permutation-wires", {"panels": _wire_panels(spec, element.value)})
    raise ValueError(f"unknown renderer scheme {scheme!r}")


def element_from_descriptor(variant: VariantSpec, features: FeatureVector) -> Element:
    """Inverse of card_descriptor."""
    spec = variant.group
    scheme = features.scheme
    values = features.values
    if scheme == "set4":
        value = (
            values["number"] - 1,
            values["shape"],
            values["color"],
            values["shading"],
        )
        return groups.element_of(spec, value)
    if scheme == "socks6":
        present = set(values["colors"])
        value = tuple(1 if c in present else 0 for c in SOCK_COLORS)
        return groups.element_of(spec, value)
    if scheme == "quads3":
        attrs = (values["count"] - 1, values["color"], values["shape"])
        bits = []
        for a in attrs:
            bits.extend(divmod(a, 2))
        return groups.element_of(spec, tuple(bits))
    if scheme == "pentagons3":
        return groups.element_of(spec, tuple(values["directions"]))
    if scheme == "octa":
        return groups.element_of(
            spec, (values["spiral"], tuple(values["octahedron_faces"]))
        )
    if scheme == "permutation-wires":
        return groups.element_of(spec, _value_from_panels(spec, values["panels"]))
    raise ValueError(f"unknown renderer scheme {scheme!r}")


def _wire_panels(spec: GroupSpec, value: Any) -> list[dict]:
    if isinstance(spec, (groups.Symmetric, groups.Alternating)):
        return [{
            "images": list(value),
            "beads": None,
            "odd": groups.perm_parity(value),
        }]
    if isinstance(spec, groups.Wreath) and isinstance(spec.base, groups.Cyclic) and spec.base.n == 2:
        beads, perm = value
        return [{
            "images": list(perm),
            "beads": list(beads),
            "odd": groups.perm_parity(perm),
        }]
    if isinstance(spec, groups.DirectProduct):
        panels = []
        for part, part_value in zip(spec.parts, value):
            panels.extend(_wire_panels(part, part_value))
        return panels
    if isinstance(spec, groups.Power):
        panels = []
        for part_value in value:
            panels.extend(_wire_panels(spec.base, part_value))
        return panels
    raise ValueError(f"no wire rendering for {spec!r}")


def _value_from_panels(spec: GroupSpec, panels: list[dict]) -> Any:
    value, rest = _consume_panels(spec, panels)
    if rest:
        raise ValueError("too many wire panels")
    return value


def _consume_panels(spec: GroupSpec, panels: list[dict]) -> tuple[Any, list[dict]]:
    if isinstance(spec, (groups.Symmetric, groups.Alternating)):
        return tuple(panels[0]["images"]), panels[1:]
    if isinstance(spec, groups.Wreath):
        panel = panels[0]
        return (tuple(panel["beads"]), tuple(panel["images"])), panels[1:]
    if isinstance(spec, groups.DirectProduct):
        out = []
        for part in spec.parts:
            v, panels = _consume_panels(part, panels)
            out.append(v)
        return tuple(out), panels
    if isinstance(spec, groups.Power):
        out = []
        for _ in range(spec.k):
            v, panels = _consume_panels(spec.base, panels)
            out.append(v)
        return tuple(out), panels
    raise ValueError(f"no wire rendering for {spec!r}")


# ---------------------------------------------------------------------------
# the octahedral double view: C2 x S4 drawn as a cube, i.e. C2 wr S3
#
# The 48 octahedral symmetries are the signed 3x3 permutation matrices.
# Rotations (det +1) permute the 4 cube diagonals faithfully, giving S4;
# the center {I, -I} gives the C2 factor. Decomposing the matrix into
# (axis permutation, sign vector) is exactly a C2 wr S3 value, and the
# assembled map is a group isomorphism for this module's conventions
# (verified exhaustively in the test suite).

_DIAGONALS = ((1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1))


def _mat_apply(m, v):
    return tuple(sum(m[r][c] * v[c] for c in range(3)) for r in range(3))


def _mat_det(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _diag_action(m) -> tuple[int, ...]:
    out = []
    for v in _DIAGONALS:
        w = _mat_apply(m, v)
        if w[0] < 0:
            w = tuple(-x for x in w)
        out.append(_DIAGONALS.index(w))
    return tuple(out)


@lru_cache(maxsize=1)
def _rotation_by_diag_perm() -> dict[tuple[int, ...], tuple]:
    table = {}
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = [[0] * 3 for _ in range(3)]
            for c in range(3):
                m[perm[c]][c] = signs[c]
            m = tuple(tuple(row) for row in m)
            if _mat_det(m) == 1:
                table[_diag_action(m)] = m
    return table


def _octa_to_wreath(perm: tuple[int, ...], parity: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(C2, S4) value -> (hollow bits, 3-color permutation) of the cube view."""
    m = _rotation_by_diag_perm()[perm]
    if parity:
        m = tuple(tuple(-x for x in row) for row in m)
    rho = [0] * 3
    signs = [0] * 3
    for c in range(3):
        for r in range(3):
            if m[r][c] != 0:
                rho[c] = r
                signs[c] = 0 if m[r][c] > 0 else 1
    return tuple(signs), tuple(rho)


# ---------------------------------------------------------------------------
# JSON views

def variant_to_jsonable(variant: VariantSpec) -> dict:
    return {
        "id": variant.id,
        "display_name": variant.display_name,
        "group": print_group_expr(variant.group),
        "rule": rule_to_jsonable(variant.rule),
        "include_identity": variant.include_identity,
        "deck_size": variant.deck_size,
        "table_size": variant.table_size,
        "add_count": variant.add_count,
        "renderer": variant.renderer,
    }


def card_to_jsonable(card: Card) -> dict:
    return {
        "card_id": card.card_id,
        "element_index": card.element.index,
        "element": groups.value_to_jsonable(card.element.value),
        "features": {"scheme": card.features.scheme, **card.features.values},
    }
