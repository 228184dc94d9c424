"""Silver conditions: partial 0/1 functions with infinitely many free positions.

The thinning here mirrors the Sacks one through the tree view of a
condition: a position is free exactly when every node at that level splits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from ..baire import EnumeratedSet, set_from_json
from ..trees import FiniteTree, LazyTree, TreeError, truncate
from .certificates import IncompatibilityCertificate, sacks_incompatibility
from .coloring import ThinPlan, divergence_level, ev_diff_family, split_permitted
from .sacks import AntichainResult, certify_pairs


class SilverError(TreeError):
    pass


@dataclass(frozen=True, eq=False)
class SilverCondition:
    free: Callable[[int], bool]
    value: Callable[[int], int]
    spec: Any = None

    def __call__(self, k: int) -> int | None:
        """Value at ``k``, or ``None`` at a free position."""
        if self.free(k):
            return None
        v = self.value(k)
        if v not in (0, 1):
            raise SilverError(f"value {v} at position {k} is not 0 or 1")
        return v

    def free_positions(self, lo: int, hi: int) -> list[int]:
        return [k for k in range(lo, hi) if self.free(k)]


def silver(free: EnumeratedSet | None, values: dict[int, int] | None = None, default: int = 0) -> SilverCondition:
    """Condition with free positions ``free`` and fixed values ``values`` (else ``default``)."""
    values = {int(k): int(v) for k, v in (values or {}).items()}
    is_free = (lambda k: False) if free is None else free.contains
    spec = {
        "free": None if free is None else free.to_json(),
        "default": default,
        "values": {str(k): v for k, v in sorted(values.items())},
    }
    return SilverCondition(is_free, lambda k: values.get(k, default), spec)


def silver_from_json(data: dict) -> SilverCondition:
    try:
        free = None if data.get("free") is None else set_from_json(data["free"])
        return silver(free, data.get("values"), int(data.get("default", 0)))
    except (AttributeError, TypeError, ValueError) as exc:
        raise SilverError(f"malformed Silver condition: {data!r}") from exc


def silver_lazy(p: SilverCondition) -> LazyTree:
    def step(k):
        if p.free(k):
            return ((0, k + 1), (1, k + 1))
        return ((p(k), k + 1),)

    return LazyTree(0, step, 2, {"silver": p.spec})


def silver_to_tree(p: SilverCondition, N: int) -> FiniteTree:
    """All binary sequences of length at most ``N`` that agree with ``p`` where it is defined."""
    return truncate(silver_lazy(p), N)


def silver_thin(p: SilverCondition, plan: ThinPlan) -> SilverCondition:
    """Fix (to 0) every free position where a thinned condition may not branch."""
    X, h = plan.X, plan.h
    horizon = max((hi for _, _, hi in plan.enforced_blocks()), default=X.mu(1))
    if not p.free_positions(0, horizon):
        raise SilverError(f"condition has no free positions below {horizon}")
    for i, lo, hi in plan.enforced_blocks():
        if not p.free_positions(lo, hi):
            raise SilverError(f"no free position in designated sub-block [{lo},{hi}) of block {i}")
    low_end = X.mu(1)

    def allowed(k: int) -> bool:
        if k < low_end:
            return plan.low_policy == "keep"
        return split_permitted(X, h, k, plan.strict)

    def free(k: int) -> bool:
        return p.free(k) and allowed(k)

    def value(k: int) -> int:
        return 0 if p.free(k) else p.value(k)

    spec = {"thinned": {"condition": p.spec, "plan": plan.to_json()}}
    return SilverCondition(free, value, spec)


def silver_incompatibility(q1: SilverCondition, q2: SilverCondition, divergence_level: int, D: int) -> IncompatibilityCertificate:
    """Certificate computed on the tree views of the two conditions."""
    return sacks_incompatibility(silver_lazy(q1), silver_lazy(q2), divergence_level, D, kind="silver")


def common_free(p: SilverCondition, q: SilverCondition, lo: int, hi: int) -> list[int]:
    return [k for k in range(lo, hi) if p.free(k) and q.free(k)]


def agree_upto(p: SilverCondition, q: SilverCondition, N: int) -> bool:
    """Whether ``p`` and ``q`` agree on every position below ``N`` fixed by both."""
    return all(p(k) == q(k) for k in range(N) if not p.free(k) and not q.free(k))


@dataclass(frozen=True)
class SilverAudit:
    horizon: int
    contained: bool
    forbidden_free: tuple[int, ...]
    # enforced blocks whose designated sub-block has no free position
    missing_free: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return self.contained and not self.forbidden_free and not self.missing_free

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "contained": self.contained,
            "forbidden_free": list(self.forbidden_free),
            "missing_free": list(self.missing_free),
            "ok": self.ok,
        }


def audit_silver_thin(p: SilverCondition, q: SilverCondition, plan: ThinPlan, N: int) -> SilverAudit:
    """Position-by-position check of a thinned condition below ``N``."""
    X, h = plan.X, plan.h
    contained = all(p.free(k) or (not q.free(k) and q(k) == p(k)) for k in range(N))
    low_end = X.mu(1)
    forbidden = []
    for k in q.free_positions(0, N):
        if k < low_end:
            if plan.low_policy == "leftmost":
                forbidden.append(k)
        elif not split_permitted(X, h, k, plan.strict):
            forbidden.append(k)
    missing = [i for i, lo, hi in plan.enforced_blocks() if hi <= N and not q.free_positions(lo, hi)]
    return SilverAudit(N, contained, tuple(forbidden), tuple(missing))


def silver_antichain(
    X, p: SilverCondition, count: int, i_max: int, D: int | None, low_policy: str = "keep", jobs: int = 1
) -> AntichainResult:
    """Silver analogue of the Sacks antichain, certified on tree views."""
    plans = [ThinPlan(X, h, tuple(range(i_max + 1)), low_policy) for h in ev_diff_family(count)]
    members = [(silver_thin(p, plan), plan) for plan in plans]
    views = [silver_lazy(q) for q, _ in members]

    def certify(a: int, b: int) -> IncompatibilityCertificate:
        div = divergence_level(X, a, b)
        return sacks_incompatibility(views[a], views[b], div, 2 * div if D is None else D, kind="silver")

    return AntichainResult(tuple(members), certify_pairs(count, certify, jobs))
