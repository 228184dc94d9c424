"""Colorings, eventually different families, and the thinning plan."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from ..baire import EnumeratedSet, block, set_from_json


class ColoringError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Coloring:
    """A function ``h`` with ``h(i) < 2**i`` picking one sub-block of each block."""

    fn: Callable[[int], int]
    spec: Any = None

    def __call__(self, i: int) -> int:
        v = self.fn(i)
        if not 0 <= v < 2**i:
            raise ColoringError(f"h({i}) = {v} is outside [0, 2^{i})")
        return v

    def to_json(self) -> Any:
        if self.spec is None:
            raise ColoringError("this coloring has no JSON form")
        return self.spec

    def __eq__(self, other) -> bool:
        return isinstance(other, Coloring) and self.spec is not None and self.spec == other.spec

    def __hash__(self) -> int:
        return hash(repr(self.spec))


def modular(alpha: int) -> Coloring:
    """``h(i) = alpha mod 2**i``."""
    if alpha < 0:
        raise ColoringError("alpha must be nonnegative")
    return Coloring(lambda i: alpha % (2**i), {"modular": alpha})


def explicit_coloring(values) -> Coloring:
    values = [int(v) for v in values]

    def fn(i: int) -> int:
        if i >= len(values):
            raise ColoringError(f"explicit coloring of length {len(values)} is undefined at {i}")
        return values[i]

    h = Coloring(fn, {"explicit": values})
    for i in range(len(values)):
        h(i)
    return h


def coloring_from_json(data: Any) -> Coloring:
    if isinstance(data, dict) and len(data) == 1:
        if "modular" in data and isinstance(data["modular"], int):
            return modular(data["modular"])
        if "explicit" in data and isinstance(data["explicit"], list):
            return explicit_coloring(data["explicit"])
    raise ColoringError(f"malformed coloring JSON: {data!r}")


def ev_diff_family(count: int) -> list[Coloring]:
    """Colorings ``h_a(i) = a mod 2**i`` for ``a < count``; pairwise eventually different."""
    if count < 1:
        raise ColoringError("count must be at least 1")
    return [modular(a) for a in range(count)]


def divergence_index(alpha: int, beta: int) -> int:
    """Least ``i`` with ``2**i > max(alpha, beta)``; from there on ``h_alpha(i) != h_beta(i)``."""
    return max(alpha, beta).bit_length()


def divergence_level(X: EnumeratedSet, alpha: int, beta: int) -> int:
    return X.mu(2 ** divergence_index(alpha, beta))


def _block_index(X: EnumeratedSet, level: int) -> int:
    i = 0
    while X.mu(2 ** (i + 1)) <= level:
        i += 1
    return i


def locate(X: EnumeratedSet, level: int) -> tuple[int, int] | None:
    """``(i, j)`` with ``level`` in sub-block ``j`` of block ``i``; ``None`` below ``mu(1)``."""
    if level < X.mu(1):
        return None
    i = _block_index(X, level)
    lo, hi = 0, 2**i - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if X.mu(2**i + mid) <= level:
            lo = mid
        else:
            hi = mid - 1
    return i, lo


def split_permitted(X: EnumeratedSet, h: Coloring, level: int, strict: bool = False) -> bool:
    """Whether a thinned tree may ramify at ``level``.

    True below ``mu(1)`` and inside the designated sub-block ``h(i)`` of each
    block ``i``.  Strict mode follows the literal "length less than k-1"
    reading, which never constrains the last level of a sub-block.
    """
    where = locate(X, level)
    if where is None:
        return True
    i, j = where
    if j == h(i):
        return True
    return strict and level == block(X, i, j)[1] - 1


LOW_POLICIES = ("keep", "leftmost")


@dataclass(frozen=True)
class ThinPlan:
    X: EnumeratedSet
    h: Coloring
    enforced: tuple[int, ...]
    low_policy: str = "keep"
    strict: bool = False

    def __post_init__(self) -> None:
        enforced = tuple(int(i) for i in self.enforced)
        if list(enforced) != sorted(set(enforced)):
            raise ColoringError(f"enforced blocks must be sorted and distinct: {list(enforced)}")
        if any(i < 0 for i in enforced):
            raise ColoringError("enforced block indices are nonnegative")
        if self.low_policy not in LOW_POLICIES:
            raise ColoringError(f"low_policy must be one of {LOW_POLICIES}, got {self.low_policy!r}")
        object.__setattr__(self, "enforced", enforced)

    def designated(self, i: int) -> tuple[int, int]:
        """The sub-block of block ``i`` selected by the coloring."""
        return block(self.X, i, self.h(i))

    def enforced_blocks(self) -> list[tuple[int, int, int]]:
        return [(i, *self.designated(i)) for i in self.enforced]

    def to_json(self) -> dict:
        out = {
            "X": self.X.to_json(),
            "h": self.h.to_json(),
            "enforced": list(self.enforced),
            "low_policy": self.low_policy,
        }
        if self.strict:
            out["strict"] = True
        return out

    @classmethod
    def from_json(cls, data: dict) -> ThinPlan:
        try:
            return cls(
                X=set_from_json(data["X"]),
                h=coloring_from_json(data["h"]),
                enforced=tuple(data.get("enforced", ())),
                low_policy=data.get("low_policy", "keep"),
                strict=bool(data.get("strict", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ColoringError(f"malformed ThinPlan JSON: {data!r}") from exc
