"""Infinite subsets of omega as increasing enumerations, and the window predicates on them.

Every "for almost all" / "for infinitely many" statement is replaced by a
bounded verdict with explicit witnesses.
"""

from __future__ import annotations

import threading
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence


class EnumerationError(ValueError):
    """An enumeration is not strictly increasing, or a finite prefix ran out."""


@dataclass(frozen=True, eq=False)
class EnumeratedSet:
    """An infinite ``X`` subset of omega, given by its increasing enumeration ``mu``."""

    fn: Callable[[int], int]
    spec: Any = None
    _cache: list = field(default_factory=list, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def mu(self, n: int) -> int:
        if n < 0:
            raise EnumerationError(f"index {n} is negative")
        cache = self._cache
        if n < len(cache):
            return cache[n]
        with self._lock:
            for k in range(len(cache), n + 1):
                v = self.fn(k)
                if v < 0:
                    raise EnumerationError(f"mu({k}) = {v} is negative")
                if k > 0 and cache[k - 1] >= v:
                    raise EnumerationError(f"enumeration not strictly increasing at index {k}")
                cache.append(v)
        return cache[n]

    __call__ = mu

    def members_in(self, lo: int, hi: int) -> list[int]:
        """Members in ``[lo, hi)``, found by enumerating up to ``hi``."""
        cache = self._cache
        while not cache or cache[-1] < hi:
            self.mu(len(cache))
        return cache[bisect_left(cache, lo) : bisect_left(cache, hi)]

    def count_in(self, lo: int, hi: int) -> int:
        return len(self.members_in(lo, hi))

    def contains(self, v: int) -> bool:
        return self.count_in(v, v + 1) == 1

    def prefix(self, n: int) -> list[int]:
        return [self.mu(k) for k in range(n)]

    def to_json(self) -> Any:
        if self.spec is None:
            raise EnumerationError("this enumeration has no JSON form")
        return self.spec

    def __eq__(self, other) -> bool:
        return isinstance(other, EnumeratedSet) and self.spec is not None and self.spec == other.spec

    def __hash__(self) -> int:
        return hash(repr(self.spec))


def affine(a: int, b: int = 0) -> EnumeratedSet:
    """``mu(n) = a*n + b``."""
    if a < 1 or b < 0:
        raise EnumerationError(f"affine enumeration needs a >= 1 and b >= 0, got a={a}, b={b}")
    return EnumeratedSet(lambda n: a * n + b, {"affine": {"a": a, "b": b}})


def omega() -> EnumeratedSet:
    return affine(1, 0)


def explicit(values: Sequence[int]) -> EnumeratedSet:
    """A finite prefix of an enumeration; queries past the end are errors."""
    values = [int(v) for v in values]
    for k in range(1, len(values)):
        if values[k] <= values[k - 1]:
            raise EnumerationError(f"enumeration not strictly increasing at index {k}")

    def fn(n: int) -> int:
        if n >= len(values):
            raise EnumerationError(f"explicit prefix of length {len(values)} has no element {n}")
        return values[n]

    return EnumeratedSet(fn, {"explicit": values})


def from_function(fn: Callable[[int], int], name: str = "") -> EnumeratedSet:
    return EnumeratedSet(fn, {"function": name} if name else None)


def set_from_json(data: Any) -> EnumeratedSet:
    if not isinstance(data, dict) or len(data) != 1:
        raise EnumerationError(f"malformed EnumeratedSet JSON: {data!r}")
    if "explicit" in data:
        if not isinstance(data["explicit"], list):
            raise EnumerationError("explicit enumeration must be a list")
        return explicit(data["explicit"])
    if "affine" in data:
        try:
            return affine(int(data["affine"]["a"]), int(data["affine"].get("b", 0)))
        except (TypeError, KeyError) as exc:
            raise EnumerationError(f"malformed affine enumeration: {data!r}") from exc
    raise EnumerationError(f"unknown EnumeratedSet kind: {sorted(data)}")


def mu(X: EnumeratedSet, n: int) -> int:
    return X.mu(n)


def block(X: EnumeratedSet, i: int, j: int) -> tuple[int, int]:
    """Sub-block ``j`` of block ``i``: ``[mu(2^i + j), mu(2^i + j + 1))``."""
    if not 0 <= j < 2**i:
        raise EnumerationError(f"sub-block index {j} out of range for block {i}")
    return X.mu(2**i + j), X.mu(2**i + j + 1)


def dominates_window(X: EnumeratedSet, Y: EnumeratedSet, n: int) -> bool:
    return Y.count_in(X.mu(n), X.mu(n + 1)) >= 2


def block_counts(X: EnumeratedSet, Y: EnumeratedSet, i: int) -> list[int]:
    return [Y.count_in(*block(X, i, j)) for j in range(2**i)]


def weakly_dominates_at(X: EnumeratedSet, Y: EnumeratedSet, i: int) -> bool:
    return all(Y.count_in(*block(X, i, j)) >= 2 for j in range(2**i))


def find_good_indices(X: EnumeratedSet, Y: EnumeratedSet, i_max: int) -> list[int]:
    if i_max < 0:
        raise ValueError("i_max must be nonnegative")
    return [i for i in range(i_max + 1) if weakly_dominates_at(X, Y, i)]


@dataclass(frozen=True, eq=False)
class GrowthFunction:
    f: Callable[[int], int]
    spec: Any = None

    def __call__(self, n: int) -> int:
        return self.f(n)


def growth_from_json(data: Any) -> GrowthFunction:
    if isinstance(data, dict) and "affine" in data:
        a, b = int(data["affine"]["a"]), int(data["affine"].get("b", 0))
        return GrowthFunction(lambda n: a * n + b, data)
    if isinstance(data, dict) and "explicit" in data:
        values = [int(v) for v in data["explicit"]]

        def f(n: int) -> int:
            if n >= len(values):
                raise EnumerationError(f"explicit growth function undefined at {n}")
            return values[n]

        return GrowthFunction(f, data)
    raise EnumerationError(f"malformed GrowthFunction JSON: {data!r}")


def iterate_set(f: GrowthFunction | Callable[[int], int], n: int) -> EnumeratedSet:
    """The orbit ``{f(n), f(f(n)), ...}`` as an enumeration."""

    def fn(k: int) -> int:
        x = n
        for _ in range(k + 1):
            y = f(x)
            if y <= x:
                raise EnumerationError(f"growth function is not progressive: f({x}) = {y}")
            x = y
        return x

    spec = getattr(f, "spec", None)
    return EnumeratedSet(fn, {"iterate": spec, "start": n} if spec is not None else None)


@dataclass(frozen=True)
class LeqStarVerdict:
    holds: bool
    threshold: int | None
    counterexamples: tuple[int, ...]


def leq_star_upto(f: Callable[[int], int], g: Callable[[int], int], N: int) -> LeqStarVerdict:
    """Bounded ``f <=* g``: the least ``m <= N`` with ``f(n) <= g(n)`` on ``[m, N]``."""
    bad = tuple(n for n in range(N + 1) if f(n) > g(n))
    if not bad:
        return LeqStarVerdict(True, 0, ())
    if bad[-1] == N:
        return LeqStarVerdict(False, None, bad)
    return LeqStarVerdict(True, bad[-1] + 1, bad)
