"""Finite groups built from symbolic specifications.

Atoms: cyclic, symmetric, and alternating groups. Combinators: direct
products, powers, and wreath products with a symmetric top group
(``base wr S_n`` = n copies of the base permuted by S_n).

Conventions, fixed globally:

* ``compose(a, b)`` means "apply a, then b". For permutations stored as
  image tuples this is ``result[i] = b[a[i]]``. For wreath elements
  ``(beads, perm)`` the beads sit on input slots: composing picks up
  ``a.beads[i]`` and then ``b.beads[a.perm[i]]`` along the wire entering
  slot ``i``.
* The canonical enumeration is mixed-radix over the structure, with the
  leftmost component most significant and permutations in lexicographic
  image order, so the identity always has index 0.

Every value is immutable; all operations are pure functions.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations as iter_permutations
from itertools import product as iter_product
from typing import Any, Iterator

import numpy as np

ORDER_CAP = 10**6
TABLE_CAP = 4096  # largest order for which dense index tables are built


class GroupError(Exception):
    """Base class for group construction and arithmetic errors."""


class OrderCapError(GroupError):
    """Spec describes a group larger than the configured order cap."""


class ElementMismatchError(GroupError):
    """Element value does not belong to the given group."""


@dataclass(frozen=True)
class Element:
    """A group element: structured value plus ordinal in the canonical enumeration."""

    value: Any
    index: int

    def __repr__(self) -> str:
        return f"Element({self.value!r}, #{self.index})"


# ---------------------------------------------------------------------------
# permutation helpers (image-tuple representation)

def perm_compose(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
    """Apply p, then q."""
    return tuple(q[p[i]] for i in range(len(p)))


def perm_inverse(p: tuple[int, ...]) -> tuple[int, ...]:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def perm_parity(p: tuple[int, ...]) -> int:
    """0 for even, 1 for odd."""
    seen = [False] * len(p)
    parity = 0
    for i in range(len(p)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


def perm_cycle_lengths(p: tuple[int, ...]) -> list[int]:
    seen = [False] * len(p)
    out = []
    for i in range(len(p)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        out.append(length)
    return out


def perm_rank(p: tuple[int, ...]) -> int:
    """Lexicographic rank among all permutations of the same degree."""
    n = len(p)
    rank = 0
    for i in range(n):
        smaller = sum(1 for j in range(i + 1, n) if p[j] < p[i])
        rank += smaller * math.factorial(n - 1 - i)
    return rank


def perm_unrank(n: int, rank: int) -> tuple[int, ...]:
    remaining = list(range(n))
    out = []
    for i in range(n):
        radix = math.factorial(n - 1 - i)
        d, rank = divmod(rank, radix)
        out.append(remaining.pop(d))
    return tuple(out)


def even_perm_rank(p: tuple[int, ...]) -> int:
    """Lexicographic rank among even permutations of the same degree.

    An even permutation is determined by its first n-2 images, so the rank
    is the Lehmer prefix in a halved factorial radix.
    """
    n = len(p)
    rank = 0
    for i in range(n - 2):
        smaller = sum(1 for j in range(i + 1, n) if p[j] < p[i])
        rank += smaller * (math.factorial(n - 1 - i) // 2)
    return rank


def even_perm_unrank(n: int, rank: int) -> tuple[int, ...]:
    remaining = list(range(n))
    prefix = []
    for i in range(n - 2):
        radix = math.factorial(n - 1 - i) // 2
        d, rank = divmod(rank, radix)
        prefix.append(remaining.pop(d))
    a, b = remaining
    cand = tuple(prefix + [a, b])
    if perm_parity(cand) == 0:
        return cand
    return tuple(prefix + [b, a])


# ---------------------------------------------------------------------------
# group specifications

class GroupSpec:
    """Base class for symbolic group descriptions. Subclasses are frozen dataclasses."""

    def order(self) -> int:
        raise NotImplementedError

    def identity_value(self) -> Any:
        raise NotImplementedError

    def compose_values(self, x: Any, y: Any) -> Any:
        raise NotImplementedError

    def inverse_value(self, x: Any) -> Any:
        raise NotImplementedError

    def value_index(self, x: Any) -> int:
        raise NotImplementedError

    def value_at(self, i: int) -> Any:
        raise NotImplementedError

    def iter_values(self) -> Iterator[Any]:
        raise NotImplementedError

    def contains_value(self, x: Any) -> bool:
        raise NotImplementedError

    def element_order_value(self, x: Any) -> int:
        raise NotImplementedError

    def is_abelian(self) -> bool:
        raise NotImplementedError

    def _check_cap(self) -> None:
        if self.order() > ORDER_CAP:
            raise OrderCapError(
                f"group order {self.order()} exceeds cap {ORDER_CAP}"
            )


@dataclass(frozen=True)
class Cyclic(GroupSpec):
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise GroupError("cyclic group needs n >= 1")
        self._check_cap()

    def order(self) -> int:
        return self.n

    def identity_value(self) -> int:
        return 0

    def compose_values(self, x: int, y: int) -> int:
        return (x + y) % self.n

    def inverse_value(self, x: int) -> int:
        return (-x) % self.n

    def value_index(self, x: int) -> int:
        return x

    def value_at(self, i: int) -> int:
        return i

    def iter_values(self) -> Iterator[int]:
        return iter(range(self.n))

    def contains_value(self, x: Any) -> bool:
        return isinstance(x, int) and 0 <= x < self.n

    def element_order_value(self, x: int) -> int:
        return self.n // math.gcd(self.n, x)

    def is_abelian(self) -> bool:
        return True


@dataclass(frozen=True)
class Symmetric(GroupSpec):
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise GroupError("symmetric group needs n >= 1")
        self._check_cap()

    def order(self) -> int:
        return math.factorial(self.n)

    def identity_value(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def compose_values(self, x, y):
        return perm_compose(x, y)

    def inverse_value(self, x):
        return perm_inverse(x)

    def value_index(self, x) -> int:
        return perm_rank(x)

    def value_at(self, i: int):
        return perm_unrank(self.n, i)

    def iter_values(self):
        return iter_permutations(range(self.n))

    def contains_value(self, x: Any) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == self.n
            and sorted(x) == list(range(self.n))
        )

    def element_order_value(self, x) -> int:
        return math.lcm(*perm_cycle_lengths(x))

    def is_abelian(self) -> bool:
        return self.n <= 2


@dataclass(frozen=True)
class Alternating(GroupSpec):
    n: int

    def __post_init__(self) -> None:
        if self.n < 3:
            raise GroupError("alternating group needs n >= 3")
        self._check_cap()

    def order(self) -> int:
        return math.factorial(self.n) // 2

    def identity_value(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def compose_values(self, x, y):
        return perm_compose(x, y)

    def inverse_value(self, x):
        return perm_inverse(x)

    def value_index(self, x) -> int:
        return even_perm_rank(x)

    def value_at(self, i: int):
        return even_perm_unrank(self.n, i)

    def iter_values(self):
        return (p for p in iter_permutations(range(self.n)) if perm_parity(p) == 0)

    def contains_value(self, x: Any) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == self.n
            and sorted(x) == list(range(self.n))
            and perm_parity(x) == 0
        )

    def element_order_value(self, x) -> int:
        return math.lcm(*perm_cycle_lengths(x))

    def is_abelian(self) -> bool:
        return self.n == 3


@dataclass(frozen=True)
class DirectProduct(GroupSpec):
    parts: tuple[GroupSpec, ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise GroupError("direct product needs at least one factor")
        object.__setattr__(self, "parts", tuple(self.parts))
        self._check_cap()

    def order(self) -> int:
        return math.prod(p.order() for p in self.parts)

    def identity_value(self) -> tuple:
        return tuple(p.identity_value() for p in self.parts)

    def compose_values(self, x, y):
        return tuple(p.compose_values(a, b) for p, a, b in zip(self.parts, x, y))

    def inverse_value(self, x):
        return tuple(p.inverse_value(a) for p, a in zip(self.parts, x))

    def value_index(self, x) -> int:
        index = 0
        for p, a in zip(self.parts, x):
            index = index * p.order() + p.value_index(a)
        return index

    def value_at(self, i: int):
        out = []
        for p in reversed(self.parts):
            i, r = divmod(i, p.order())
            out.append(p.value_at(r))
        return tuple(reversed(out))

    def iter_values(self):
        return iter_product(*(list(p.iter_values()) for p in self.parts))

    def contains_value(self, x: Any) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == len(self.parts)
            and all(p.contains_value(a) for p, a in zip(self.parts, x))
        )

    def element_order_value(self, x) -> int:
        return math.lcm(*(p.element_order_value(a) for p, a in zip(self.parts, x)))

    def is_abelian(self) -> bool:
        return all(p.is_abelian() for p in self.parts)


@dataclass(frozen=True)
class Power(GroupSpec):
    base: GroupSpec
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise GroupError("power needs k >= 1")
        self._check_cap()

    def order(self) -> int:
        return self.base.order() ** self.k

    def identity_value(self) -> tuple:
        return tuple(self.base.identity_value() for _ in range(self.k))

    def compose_values(self, x, y):
        return tuple(self.base.compose_values(a, b) for a, b in zip(x, y))

    def inverse_value(self, x):
        return tuple(self.base.inverse_value(a) for a in x)

    def value_index(self, x) -> int:
        index = 0
        n = self.base.order()
        for a in x:
            index = index * n + self.base.value_index(a)
        return index

    def value_at(self, i: int):
        n = self.base.order()
        out = []
        for _ in range(self.k):
            i, r = divmod(i, n)
            out.append(self.base.value_at(r))
        return tuple(reversed(out))

    def iter_values(self):
        return iter_product(list(self.base.iter_values()), repeat=self.k)

    def contains_value(self, x: Any) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == self.k
            and all(self.base.contains_value(a) for a in x)
        )

    def element_order_value(self, x) -> int:
        return math.lcm(*(self.base.element_order_value(a) for a in x))

    def is_abelian(self) -> bool:
        return self.base.is_abelian()


@dataclass(frozen=True)
class Wreath(GroupSpec):
    """base wr S_n: values are (beads, perm) with beads indexed by input slot."""

    base: GroupSpec
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise GroupError("wreath product needs n >= 1")
        self._check_cap()

    def order(self) -> int:
        return self.base.order() ** self.n * math.factorial(self.n)

    def identity_value(self) -> tuple:
        return (
            tuple(self.base.identity_value() for _ in range(self.n)),
            tuple(range(self.n)),
        )

    def compose_values(self, x, y):
        xb, xp = x
        yb, yp = y
        beads = tuple(
            self.base.compose_values(xb[i], yb[xp[i]]) for i in range(self.n)
        )
        return (beads, tuple(yp[xp[i]] for i in range(self.n)))

    def inverse_value(self, x):
        xb, xp = x
        ip = perm_inverse(xp)
        beads = tuple(self.base.inverse_value(xb[ip[j]]) for j in range(self.n))
        return (beads, ip)

    def value_index(self, x) -> int:
        xb, xp = x
        index = 0
        n = self.base.order()
        for a in xb:
            index = index * n + self.base.value_index(a)
        return index * math.factorial(self.n) + perm_rank(xp)

    def value_at(self, i: int):
        i, pr = divmod(i, math.factorial(self.n))
        n = self.base.order()
        beads = []
        for _ in range(self.n):
            i, r = divmod(i, n)
            beads.append(self.base.value_at(r))
        return (tuple(reversed(beads)), perm_unrank(self.n, pr))

    def iter_values(self):
        base_values = list(self.base.iter_values())
        perms = list(iter_permutations(range(self.n)))
        return (
            (beads, perm)
            for beads in iter_product(base_values, repeat=self.n)
            for perm in perms
        )

    def contains_value(self, x: Any) -> bool:
        if not (isinstance(x, tuple) and len(x) == 2):
            return False
        xb, xp = x
        return (
            isinstance(xb, tuple)
            and len(xb) == self.n
            and all(self.base.contains_value(a) for a in xb)
            and isinstance(xp, tuple)
            and sorted(xp) == list(range(self.n))
        )

    def element_order_value(self, x) -> int:
        xb, xp = x
        result = 1
        seen = [False] * self.n
        for start in range(self.n):
            if seen[start]:
                continue
            cycle = [start]
            seen[start] = True
            j = xp[start]
            while j != start:
                cycle.append(j)
                seen[j] = True
                j = xp[j]
            # product of beads along the cycle, in traversal order
            r = self.base.identity_value()
            for i in cycle:
                r = self.base.compose_values(r, xb[i])
            result = math.lcm(result, len(cycle) * self.base.element_order_value(r))
        return result

    def is_abelian(self) -> bool:
        if self.n == 1:
            return self.base.is_abelian()
        if self.n == 2:
            return self.base.order() == 1
        return False


# ---------------------------------------------------------------------------
# element-level API

def order(spec: GroupSpec) -> int:
    """Exact order of the group."""
    return spec.order()


def identity(spec: GroupSpec) -> Element:
    return Element(spec.identity_value(), 0)


def element_at(spec: GroupSpec, index: int) -> Element:
    if not 0 <= index < spec.order():
        raise GroupError(f"element index {index} out of range")
    return Element(spec.value_at(index), index)


def element_of(spec: GroupSpec, value: Any) -> Element:
    if not spec.contains_value(value):
        raise ElementMismatchError(f"value {value!r} is not an element of {spec!r}")
    return Element(value, spec.value_index(value))


def compose(spec: GroupSpec, a: Element, b: Element) -> Element:
    """Group product: apply a, then b."""
    if not (spec.contains_value(a.value) and spec.contains_value(b.value)):
        raise ElementMismatchError("operands do not belong to this group")
    value = spec.compose_values(a.value, b.value)
    return Element(value, spec.value_index(value))


def inverse(spec: GroupSpec, a: Element) -> Element:
    if not spec.contains_value(a.value):
        raise ElementMismatchError("operand does not belong to this group")
    value = spec.inverse_value(a.value)
    return Element(value, spec.value_index(value))


def element_order(spec: GroupSpec, a: Element) -> int:
    """Least k >= 1 with a^k = identity."""
    if not spec.contains_value(a.value):
        raise ElementMismatchError("operand does not belong to this group")
    return spec.element_order_value(a.value)


@lru_cache(maxsize=64)
def elements(spec: GroupSpec) -> tuple[Element, ...]:
    """All elements exactly once, identity first, in canonical order."""
    spec._check_cap()
    out = tuple(Element(v, i) for i, v in enumerate(spec.iter_values()))
    if len(out) != spec.order():  # pragma: no cover - structural sanity
        raise GroupError("enumeration does not match group order")
    return out


def order_histogram(spec: GroupSpec) -> dict[int, int]:
    """Map element order -> number of elements of that order."""
    counts = Counter(spec.element_order_value(v) for v in spec.iter_values())
    return dict(sorted(counts.items()))


def is_abelian(spec: GroupSpec) -> bool:
    return spec.is_abelian()


def value_to_jsonable(value: Any) -> Any:
    """Nested tuples -> nested lists, for JSON output."""
    if isinstance(value, tuple):
        return [value_to_jsonable(v) for v in value]
    return value


def value_from_jsonable(data: Any) -> Any:
    if isinstance(data, list):
        return tuple(value_from_jsonable(v) for v in data)
    return data


# ---------------------------------------------------------------------------
# dense index tables for vectorized work

def _table_dtype(n: int):
    return np.uint8 if n <= 256 else (np.uint16 if n <= 65536 else np.uint32)


@lru_cache(maxsize=32)
def multiplication_table(spec: GroupSpec) -> np.ndarray:
    """mul[i, j] = index of compose(element i, element j). Requires order <= TABLE_CAP."""
    n = spec.order()
    if n > TABLE_CAP:
        raise GroupError(f"order {n} too large for dense tables (cap {TABLE_CAP})")
    values = [e.value for e in elements(spec)]
    index = {v: i for i, v in enumerate(values)}
    table = np.empty((n, n), dtype=_table_dtype(n))
    for i, a in enumerate(values):
        row = table[i]
        for j, b in enumerate(values):
            row[j] = index[spec.compose_values(a, b)]
    table.flags.writeable = False
    return table


@lru_cache(maxsize=32)
def inverse_table(spec: GroupSpec) -> np.ndarray:
    n = spec.order()
    if n > TABLE_CAP:
        raise GroupError(f"order {n} too large for dense tables (cap {TABLE_CAP})")
    values = [e.value for e in elements(spec)]
    index = {v: i for i, v in enumerate(values)}
    table = np.empty(n, dtype=_table_dtype(n))
    for i, a in enumerate(values):
        table[i] = index[spec.inverse_value(a)]
    table.flags.writeable = False
    return table
