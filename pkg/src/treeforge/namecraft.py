"""Finite posets, antichain families, and the onto-above-every-condition assignment.

``p <= q`` means ``q`` is stronger.  An element ``p`` is *large* for an
antichain ``A`` when at least ``large_threshold`` members of ``A`` lie above it.
``build_phi`` labels the members of ``A`` with targets so that above every large
element each target is hit, greedily, one fresh member per (element, target)
pair.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations


class PosetError(ValueError):
    pass


@dataclass(frozen=True)
class FinitePoset:
    """A partial order on ``elements``; ``leq`` is closed reflexively and transitively on construction."""

    elements: tuple
    leq: frozenset

    def __init__(self, elements: Iterable[Hashable], leq: Iterable[tuple[Hashable, Hashable]]) -> None:
        elems = tuple(sorted(set(elements)))
        pairs = {(a, b) for a, b in leq}
        index = set(elems)
        for a, b in pairs:
            if a not in index or b not in index:
                raise PosetError(f"relation mentions unknown element in {(a, b)!r}")
        pairs |= {(a, a) for a in elems}
        above = {a: {b for x, b in pairs if x == a} for a in elems}
        # Warshall closure, element order is irrelevant
        for k in elems:
            for a in elems:
                if k in above[a]:
                    above[a] |= above[k]
        closed = frozenset((a, b) for a in elems for b in above[a])
        for a, b in closed:
            if a != b and (b, a) in closed:
                raise PosetError(f"antisymmetry fails for {a!r} and {b!r}")
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "leq", closed)

    def le(self, p: Hashable, q: Hashable) -> bool:
        return (p, q) in self.leq

    @cached_property
    def up(self) -> dict:
        out: dict = {a: set() for a in self.elements}
        for a, b in self.leq:
            out[a].add(b)
        return {a: frozenset(v) for a, v in out.items()}

    def compatible(self, p: Hashable, q: Hashable) -> bool:
        """Whether ``p`` and ``q`` have a common upper bound."""
        return bool(self.up[p] & self.up[q])

    def to_json(self) -> dict:
        strict = sorted((a, b) for a, b in self.leq if a != b)
        return {"elements": list(self.elements), "leq": [list(p) for p in strict]}

    @classmethod
    def from_json(cls, data: dict) -> FinitePoset:
        try:
            return cls(data["elements"], [tuple(p) for p in data["leq"]])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PosetError):
                raise
            raise PosetError(f"malformed poset JSON: {exc}") from exc


def chain(n: int) -> FinitePoset:
    return FinitePoset(range(n), [(i, i + 1) for i in range(n - 1)])


def antichain_poset(n: int) -> FinitePoset:
    return FinitePoset(range(n), [])


def fan(k: int, root: Hashable = "r", prefix: str = "q") -> FinitePoset:
    """A root below ``k`` maximal points ``q1 .. qk``."""
    tops = [f"{prefix}{i}" for i in range(1, k + 1)]
    return FinitePoset([root, *tops], [(root, t) for t in tops])


@dataclass(frozen=True)
class AntichainFamily:
    antichains: tuple[tuple, ...]

    def __init__(self, poset: FinitePoset, antichains: Iterable[Iterable[Hashable]]) -> None:
        fam = tuple(tuple(sorted(set(A))) for A in antichains)
        for z, A in enumerate(fam):
            check_antichain(poset, A, z)
        object.__setattr__(self, "antichains", fam)

    def __len__(self) -> int:
        return len(self.antichains)

    def __getitem__(self, z: int) -> tuple:
        return self.antichains[z]


def check_antichain(P: FinitePoset, A: Sequence[Hashable], index: int | None = None) -> None:
    where = "" if index is None else f" in antichain {index}"
    for q in A:
        if q not in P.up:
            raise PosetError(f"{q!r}{where} is not an element of the poset")
    for a, b in combinations(A, 2):
        if P.compatible(a, b):
            raise PosetError(f"{a!r} and {b!r}{where} have a common upper bound")


def extensions(P: FinitePoset, A: Sequence[Hashable], p: Hashable) -> list:
    """Members of ``A`` above ``p``, in sorted order."""
    up = P.up[p]
    return sorted(q for q in A if q in up)


def _count_above(P: FinitePoset, A: Sequence[Hashable], p: Hashable) -> int:
    up = P.up[p]
    return sum(1 for q in A if q in up)


def large_elements(P: FinitePoset, A: Sequence[Hashable], large_threshold: int) -> list:
    return [p for p in P.elements if _count_above(P, A, p) >= large_threshold]


@dataclass(frozen=True)
class StarVerdict:
    witnesses: dict
    unwitnessed: tuple

    @property
    def ok(self) -> bool:
        return not self.unwitnessed


def verify_star(P: FinitePoset, fam: AntichainFamily, targets: Iterable[Hashable], large_threshold: int) -> StarVerdict:
    """For every element, the least antichain index with enough members above it."""
    targets = set(targets)
    if large_threshold < len(targets):
        raise PosetError(f"threshold {large_threshold} is below the number of targets {len(targets)}")
    witnesses = {}
    missing = []
    for p in P.elements:
        z = next((z for z, A in enumerate(fam.antichains) if _count_above(P, A, p) >= large_threshold), None)
        if z is None:
            missing.append(p)
        else:
            witnesses[p] = z
    return StarVerdict(witnesses, tuple(missing))


class PhiError(ValueError):
    def __init__(self, p: Hashable, target: Hashable, message: str) -> None:
        super().__init__(f"pair ({p!r}, {target!r}): {message}")
        self.pair = (p, target)


@dataclass(frozen=True)
class PhiAssignment:
    phi: dict
    # (large element, target) -> member of A carrying that target above it
    witnesses: dict


def build_phi(P: FinitePoset, A: Sequence[Hashable], targets: Sequence[Hashable], large_threshold: int) -> PhiAssignment:
    """Greedy labelling of ``A`` by ``targets``.

    Pairs ``(p, target)`` with ``p`` large are taken in lexicographic order and
    each claims the least unclaimed member of ``A`` above ``p``.  Unclaimed
    members get the first target.  Requires
    ``large_threshold >= |large| * |targets|``.
    """
    A = sorted(set(A))
    check_antichain(P, A)
    targets = sorted(set(targets))
    if not targets:
        raise PosetError("need at least one target")
    large = large_elements(P, A, large_threshold)
    phi: dict = {}
    witnesses: dict = {}
    for p in large:
        for t in targets:
            free = [q for q in extensions(P, A, p) if q not in phi]
            if not free:
                raise PhiError(p, t, "every member above it is already claimed")
            phi[free[0]] = t
            witnesses[(p, t)] = free[0]
    if large and large_threshold < len(large) * len(targets):
        # the greedy pass happened to succeed, but the guarantee does not apply
        raise PhiError(
            large[-1],
            targets[-1],
            f"threshold {large_threshold} is below {len(large)} large elements times {len(targets)} targets",
        )
    for q in A:
        phi.setdefault(q, targets[0])
    return PhiAssignment(phi, witnesses)


def check_phi(P: FinitePoset, A: Sequence[Hashable], phi: dict, targets: Iterable[Hashable], large_threshold: int) -> bool:
    """Exhaustively: every large element sees every target among the labels above it."""
    A = list(A)
    if any(q not in phi for q in A):
        raise PosetError("phi must be defined on every member of the antichain")
    targets = list(targets)
    for p in large_elements(P, A, large_threshold):
        seen = {phi[q] for q in A if P.le(p, q)}
        if any(t not in seen for t in targets):
            return False
    return True
