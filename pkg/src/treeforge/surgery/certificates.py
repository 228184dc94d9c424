"""Finite evidence that two conditions have no common extension."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable

from ..trees import OMEGA, FiniteTree, LazyTree, Node, TreeError, from_finite, lazy_intersection, ramification_points

KINDS = ("sacks", "laver", "miller", "silver")


@dataclass(frozen=True)
class IncompatibilityCertificate:
    """Outcome of an incompatibility check.

    For binary kinds ``divergence_level`` is a tree level: shared ramification
    points must all lie strictly below it.  For the omega kinds it is a value
    threshold: no node of the intersection may keep two common successors with
    values at or above it (within ``value_bound``).
    """

    kind: str
    divergence_level: int
    checked_to: int
    value_bound: int | None = None
    shared_ramifications: tuple[tuple[Node, int], ...] = ()
    violations: tuple[tuple[Node, int], ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "divergence_level": self.divergence_level,
            "checked_to": self.checked_to,
            "ok": self.ok,
            "shared_ramifications": [[list(n), lv] for n, lv in self.shared_ramifications],
            "violations": [[list(n), lv] for n, lv in self.violations],
        }
        if self.value_bound is not None:
            out["value_bound"] = self.value_bound
        return out


def _lazy(T: LazyTree | FiniteTree) -> LazyTree:
    return from_finite(T) if isinstance(T, FiniteTree) else T


def intersection_tree(S1, S2, D: int, value_bound: int | None = None) -> FiniteTree:
    return lazy_intersection(_lazy(S1), _lazy(S2), D, value_bound)


def sacks_incompatibility(S1, S2, divergence_level: int, D: int, kind: str = "sacks") -> IncompatibilityCertificate:
    """Intersect the depth-``D`` truncations and demand no shared split at or above the divergence level."""
    if D <= divergence_level:
        raise TreeError(f"check depth {D} must exceed the divergence level {divergence_level}")
    inter = intersection_tree(S1, S2, D)
    splits = sorted((t, len(t)) for t in ramification_points(inter))
    return IncompatibilityCertificate(
        kind=kind,
        divergence_level=divergence_level,
        checked_to=D,
        shared_ramifications=tuple(s for s in splits if s[1] < divergence_level),
        violations=tuple(s for s in splits if s[1] >= divergence_level),
    )


def omega_incompatibility(
    S1: LazyTree, S2: LazyTree, divergence_level: int, D: int, value_bound: int, kind: str = "laver"
) -> IncompatibilityCertificate:
    """Walk the intersection of two trees on omega to depth ``D``.

    A node is a violation when it keeps at least two common successors with
    values in ``[divergence_level, value_bound)``; each violation is reported
    as ``(node, count)``.  Shared ramifications record nodes with two or more
    common successors below the threshold.  Nodes reached in an already
    examined pair of states are skipped.
    """
    if S1.width != OMEGA or S2.width != OMEGA:
        raise TreeError("omega incompatibility needs trees on omega")
    if value_bound <= divergence_level:
        raise TreeError("value bound must exceed the divergence threshold")
    shared: list[tuple[Node, int]] = []
    violations: list[tuple[Node, int]] = []
    # the verdict at a node depends only on the pair of states, so each pair is
    # examined once, at its shallowest and lexicographically least node
    seen = {(S1.root_state, S2.root_state)}
    frontier: list[tuple[Node, Hashable, Hashable]] = [((), S1.root_state, S2.root_state)]
    while frontier and len(frontier[0][0]) < D:
        nxt = []
        for node, a, b in frontier:
            kb = dict(S2.successors(b, value_bound))
            common = [(e, na, kb[e]) for e, na in S1.successors(a, value_bound) if e in kb]
            high = sum(1 for e, _, _ in common if e >= divergence_level)
            if high >= 2:
                violations.append((node, high))
            elif len(common) >= 2:
                shared.append((node, len(common)))
            for e, na, nb in common:
                if (na, nb) not in seen:
                    seen.add((na, nb))
                    nxt.append((node + (e,), na, nb))
        frontier = nxt
    return IncompatibilityCertificate(
        kind=kind,
        divergence_level=divergence_level,
        checked_to=D,
        value_bound=value_bound,
        shared_ramifications=tuple(sorted(shared)),
        violations=tuple(sorted(violations)),
    )
