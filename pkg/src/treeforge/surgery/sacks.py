"""Thinning perfect binary trees so that they split only in designated sub-blocks."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Hashable, Sequence

from ..baire import EnumeratedSet, block
from ..trees import DeadEndError, LazyTree, Node, TreeError, is_prefix, ramification_points, truncate
from .certificates import IncompatibilityCertificate, sacks_incompatibility
from .coloring import Coloring, ColoringError, ThinPlan, divergence_level, ev_diff_family, locate, split_permitted


class ThinningError(TreeError):
    pass


class NotGoodError(ThinningError):
    def __init__(self, i: int, detail: str = "") -> None:
        super().__init__(f"block {i} is not good for the input tree" + (f": {detail}" if detail else ""))
        self.block = i


class NoGoodBlocksError(ThinningError):
    def __init__(self, index: int) -> None:
        super().__init__(f"input tree {index} has no good block")
        self.index = index


def ramifying_extension(T: LazyTree, state: Hashable, levels: int) -> tuple[int, ...] | None:
    """Relative path from a node to its earliest, lexicographically least ramifying extension.

    Only extensions fewer than ``levels`` levels below the node count.
    """
    frontier: list[tuple[tuple[int, ...], Hashable]] = [((), state)]
    for _ in range(levels):
        seen: set = set()
        nxt = []
        for path, s in frontier:
            succ = T.successors(s)
            if len(succ) >= 2:
                return path
            for e, n in succ:
                if n not in seen:
                    seen.add(n)
                    nxt.append((path + (e,), n))
        frontier = nxt
    return None


@dataclass(frozen=True)
class ObeysReport:
    ok: bool
    # representative node at a sub-block start -> its ramifying extension
    witnesses: dict
    failures: tuple[Node, ...]


def sacks_weakly_obeys_at(T: LazyTree, X: EnumeratedSet, i: int, strict: bool = False) -> ObeysReport:
    """Every node at each level ``mu(2^i + j)`` ramifies below ``mu(2^i + j + 1)``."""
    witnesses: dict[Node, Node] = {}
    failures: list[Node] = []
    levels_iter = T.iter_levels()
    level, frontier = next(levels_iter)
    for j in range(2**i):
        lo, hi = block(X, i, j)
        while level < lo:
            level, frontier = next(levels_iter)
        levels = hi - lo - 1 if strict else hi - lo
        for state, node in sorted(frontier.items(), key=lambda kv: kv[1]):
            path = ramifying_extension(T, state, levels)
            if path is None:
                failures.append(node)
            else:
                witnesses[node] = node + path
    return ObeysReport(not failures, witnesses, tuple(failures))


def good_blocks(T: LazyTree, X: EnumeratedSet, i_max: int, strict: bool = False) -> list[int]:
    return [i for i in range(i_max + 1) if sacks_weakly_obeys_at(T, X, i, strict).ok]


def sacks_thin(T: LazyTree, plan: ThinPlan, check: bool = True) -> LazyTree:
    """Thin ``T`` so it ramifies only where the plan allows.

    Outside the low region and the designated sub-blocks every node keeps only
    its least child.  In each enforced sub-block, every node at its first level
    keeps the path to its earliest ramifying extension in ``T`` and that one
    split; the rest of the sub-block is pruned like any other level.  Below
    ``mu(1)`` the low policy decides: ``keep`` copies ``T``, ``leftmost``
    prunes.  In strict mode the last level of every sub-block is left as in
    ``T``.
    """
    if T.width != 2:
        raise ThinningError("Sacks thinning needs a binary tree")
    X, h = plan.X, plan.h
    if check:
        for i in plan.enforced:
            report = sacks_weakly_obeys_at(T, X, i, plan.strict)
            if not report.ok:
                raise NotGoodError(i, f"no ramification below the sub-block end for {[list(n) for n in report.failures[:3]]}")

    low_end = X.mu(1)
    enforced = set(plan.enforced)
    zones: dict[int, tuple] = {}

    def zone(level: int) -> tuple:
        z = zones.get(level)
        if z is None:
            where = locate(X, level)
            if where is None:
                z = ("low",)
            else:
                i, j = where
                lo, hi = block(X, i, j)
                if i in enforced and j == h(i):
                    z = ("enforced", lo, hi)
                elif plan.strict and level == hi - 1:
                    z = ("free",)
                else:
                    z = ("prune",)
            zones[level] = z
        return z

    witness_cache: dict = {}

    def witness(state, lo: int, hi: int):
        key = (state, lo, hi)
        if key not in witness_cache:
            levels = hi - lo - 1 if plan.strict else hi - lo
            path = ramifying_extension(T, state, levels)
            if path is None:
                raise NotGoodError(locate(X, lo)[0], f"a node at level {lo} does not ramify below {hi}")
            witness_cache[key] = path
        return witness_cache[key]

    def step(state):
        level, s, path = state
        succ = T.successors(s)
        if not succ:
            raise DeadEndError((), f"input tree has a dead end at level {level}")
        z = zone(level)
        if z[0] == "low":
            keep = plan.low_policy == "keep"
        elif z[0] == "free":
            keep = True
        elif z[0] == "enforced":
            if level == z[1]:
                path = witness(s, z[1], z[2])
            if path is None:
                keep = plan.strict and level == z[2] - 1
            elif path:
                nxt = dict(succ)
                return ((path[0], (level + 1, nxt[path[0]], path[1:])),)
            else:
                return tuple((e, (level + 1, n, None)) for e, n in succ)
        else:
            keep = False
        if keep:
            return tuple((e, (level + 1, n, None)) for e, n in succ)
        e, n = succ[0]
        return ((e, (level + 1, n, None)),)

    return LazyTree(
        root_state=(0, T.root_state, None),
        step=step,
        width=2,
        ref={"thinned": {"tree": T.ref, "plan": _plan_ref(plan)}},
    )


def _plan_ref(plan: ThinPlan):
    try:
        return plan.to_json()
    except ValueError:
        return {"enforced": list(plan.enforced), "low_policy": plan.low_policy, "opaque": id(plan)}


@dataclass(frozen=True)
class AntichainResult:
    members: tuple[tuple[LazyTree, ThinPlan], ...]
    certificates: dict  # (alpha, beta) -> IncompatibilityCertificate

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.certificates.values())


def certify_pairs(count: int, certify: Callable[[int, int], IncompatibilityCertificate], jobs: int = 1) -> dict:
    """``certify(a, b)`` for every pair ``a < b``; parallel when ``jobs > 1``, same result either way."""
    pairs = list(combinations(range(count), 2))
    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            certs = list(pool.map(lambda p: certify(*p), pairs))
    else:
        certs = [certify(*p) for p in pairs]
    return dict(zip(pairs, certs))


def antichain_build(
    X: EnumeratedSet,
    trees: Sequence[LazyTree],
    i_max: int,
    D: int | None,
    low_policy: str = "keep",
    jobs: int = 1,
) -> AntichainResult:
    """Thin tree ``a`` with ``h_a(i) = a mod 2^i`` and certify every pair.

    Every good block up to ``i_max`` is enforced.  The pair ``(a, b)`` is
    checked against the level ``mu(2^k)``, ``k`` the first index from which
    the two colorings differ, to depth ``D`` (twice that level when ``D`` is
    ``None``).
    """
    if not trees:
        return AntichainResult((), {})
    hs = ev_diff_family(len(trees))
    members = []
    for idx, T in enumerate(trees):
        enforced = good_blocks(T, X, i_max)
        if not enforced:
            raise NoGoodBlocksError(idx)
        plan = ThinPlan(X, hs[idx], tuple(enforced), low_policy)
        members.append((sacks_thin(T, plan, check=False), plan))

    def certify(a: int, b: int) -> IncompatibilityCertificate:
        div = divergence_level(X, a, b)
        return sacks_incompatibility(members[a][0], members[b][0], div, 2 * div if D is None else D)

    return AntichainResult(tuple(members), certify_pairs(len(members), certify, jobs))


@dataclass(frozen=True)
class ThinAudit:
    depth: int
    contained: bool
    # ramification points at levels the plan forbids
    forbidden_splits: tuple[Node, ...]
    # (block, node at the sub-block start) with no split before the sub-block ends
    missing_splits: tuple[tuple[int, Node], ...]

    @property
    def ok(self) -> bool:
        return self.contained and not self.forbidden_splits and not self.missing_splits

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "contained": self.contained,
            "forbidden_splits": [list(t) for t in self.forbidden_splits],
            "missing_splits": [[i, list(t)] for i, t in self.missing_splits],
            "ok": self.ok,
        }


def audit_thin(T: LazyTree, S: LazyTree, plan: ThinPlan, D: int) -> ThinAudit:
    """Check a thinned tree against its plan by scanning both truncations to depth ``D``.

    Only splits strictly below ``D`` are judged, and only enforced sub-blocks
    ending at or before ``D``.
    """
    X, h = plan.X, plan.h
    small = truncate(S, D)
    # prefix-closure makes it enough to walk the maximal nodes through T
    contained = all(T.walk(t) is not None for t in small.leaves)
    ram = sorted(ramification_points(small), key=lambda t: (len(t), t))
    low_end = X.mu(1)
    forbidden = []
    for t in ram:
        if len(t) < low_end:
            if plan.low_policy == "leftmost":
                forbidden.append(t)
        elif not _permitted(plan, len(t)):
            forbidden.append(t)
    missing = []
    for i in plan.enforced:
        lo, hi = block(X, i, h(i))
        if hi > D:
            continue
        limit = hi - 1 if plan.strict else hi
        for t in small.level(lo):
            if not any(len(u) < limit and is_prefix(t, u) for u in ram):
                missing.append((i, t))
    return ThinAudit(D, contained, tuple(forbidden), tuple(missing))


def _permitted(plan: ThinPlan, level: int) -> bool:
    try:
        return split_permitted(plan.X, plan.h, level, plan.strict)
    except ColoringError:
        # a finite coloring designates nothing past its end
        i, j = locate(plan.X, level)
        return plan.strict and level == block(plan.X, i, j)[1] - 1
