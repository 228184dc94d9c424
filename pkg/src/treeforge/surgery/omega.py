"""Laver and Miller trees on omega: weakly obeying, X0 extraction and thinning."""

from __future__ import annotations

from itertools import islice
from typing import Hashable, Sequence

from ..baire import EnumeratedSet, EnumerationError, block, explicit
from ..trees import OMEGA, LazyTree, Node, TreeError
from .certificates import IncompatibilityCertificate, omega_incompatibility
from .coloring import ThinPlan, divergence_level, ev_diff_family
from .sacks import AntichainResult, ThinAudit, certify_pairs


class OmegaThinningError(TreeError):
    def __init__(self, state: Hashable, message: str, block_index: int | None = None) -> None:
        super().__init__(f"at a node in input state {state!r}: {message}")
        self.state = state
        self.block = block_index


def _enumerate(successors: EnumeratedSet, nxt):
    n = 0
    while True:
        try:
            v = successors.mu(n)
        except EnumerationError:
            return
        yield v, nxt
        n += 1


def laver_tree(successors: EnumeratedSet, stem: Sequence[int] = ()) -> LazyTree:
    """Every node extending ``stem`` has successor set ``successors``."""
    stem = tuple(int(e) for e in stem)

    def step(state):
        if state < len(stem):
            return ((stem[state], state + 1),)
        return _enumerate(successors, len(stem))

    return LazyTree(0, step, OMEGA, {"laver": {"successors": successors.to_json(), "stem": list(stem)}})


def miller_tree(successors: EnumeratedSet, period: int, offset: int = 0) -> LazyTree:
    """Branches along ``successors`` at levels ``= offset (mod period)``, and continues with 0 elsewhere."""
    if period < 1 or not 0 <= offset < period:
        raise TreeError("need period >= 1 and 0 <= offset < period")

    def step(state):
        nxt = (state + 1) % period
        if state == offset:
            return _enumerate(successors, nxt)
        return ((0, nxt),)

    return LazyTree(
        0, step, OMEGA, {"miller": {"successors": successors.to_json(), "period": period, "offset": offset}}
    )


def laver_weakly_obeys_at(T: LazyTree, t: Sequence[int], X: EnumeratedSet, i: int) -> bool:
    """Every sub-block of block ``i`` contains a successor value of ``t``."""
    state = T.walk(tuple(t))
    if state is None:
        raise TreeError(f"{list(t)} is not a node of the tree")
    if not T.splits(state):
        raise TreeError(f"{list(t)} is not a ramification point")
    return _obeys(T, state, X, i)


def _obeys(T: LazyTree, state: Hashable, X: EnumeratedSet, i: int) -> bool:
    values = [e for e, _ in T.successors(state, X.mu(2 ** (i + 1)))]
    return all(any(lo <= v < hi for v in values) for lo, hi in (block(X, i, j) for j in range(2**i)))


def laver_extract_X0(T: LazyTree, ram_points: Sequence[Sequence[int]], value_bound: int) -> EnumeratedSet:
    """Greedy prefix of an ``X0`` each of whose windows meets every point's successors.

    ``mu(0) = 0`` and ``mu(k+1)`` is the least ``v <= value_bound`` such that
    every supplied point has a successor in ``[mu(k), v)``.
    """
    succ = []
    for t in ram_points:
        state = T.walk(tuple(t))
        if state is None:
            raise TreeError(f"{list(t)} is not a node of the tree")
        succ.append([e for e, _ in T.successors(state, value_bound)])
    values = [0]
    while True:
        lo = values[-1]
        nxt = 0
        for vals in succ:
            above = [v for v in vals if v >= lo]
            if not above:
                nxt = None
                break
            nxt = max(nxt, above[0] + 1)
        if nxt is None or nxt > value_bound:
            break
        values.append(nxt)
    if len(values) < 2:
        raise TreeError(f"value bound {value_bound} too small to find any window")
    return explicit(values)


def _omega_thin(T: LazyTree, plan: ThinPlan, laver: bool) -> LazyTree:
    if T.width != OMEGA:
        raise TreeError("Laver/Miller thinning needs a tree on omega")
    X, h = plan.X, plan.h
    if not plan.enforced:
        raise TreeError("nothing to enforce")
    blocks = [(i, *block(X, i, h(i))) for i in plan.enforced]
    top = max(hi for _, _, hi in blocks)
    i_top = max(plan.enforced)
    value_bound = max(top, X.mu(2 ** (i_top + 1)))
    cache: dict = {}

    def step(state):
        s, above_stem = state
        if state in cache:
            return cache[state]
        if not T.splits(s):
            if laver and above_stem:
                raise OmegaThinningError(s, "not a Laver tree: node above the stem does not branch")
            out = tuple((e, (n, above_stem)) for e, n in islice(T.step(s), 1))
            cache[state] = out
            return out
        for i in plan.enforced:
            if not _obeys(T, s, X, i):
                raise OmegaThinningError(s, f"successors do not meet every sub-block of block {i}", i)
        succ = T.successors(s, value_bound)
        out = []
        for i, lo, hi in blocks:
            kept = [(e, (n, True)) for e, n in succ if lo <= e < hi]
            if not kept:
                raise OmegaThinningError(s, f"no successor in designated sub-block [{lo},{hi}) of block {i}", i)
            out.extend(kept)
        out = tuple(sorted(out, key=lambda x: x[0]))
        cache[state] = out
        return out

    return LazyTree(
        (T.root_state, False),
        step,
        OMEGA,
        {"thinned": {"tree": T.ref, "plan": plan.to_json()}},
    )


def laver_thin(T: LazyTree, plan: ThinPlan) -> LazyTree:
    """Keep, at each ramification point, only successors in the designated sub-blocks.

    The result is checked lazily: errors surface when an offending node is
    first expanded.
    """
    return _omega_thin(T, plan, laver=True)


def miller_thin(T: LazyTree, plan: ThinPlan, depth: int) -> LazyTree:
    """Like ``laver_thin`` but non-branching nodes may occur anywhere.

    ``depth`` bounds the search for an infinitely branching node from the root.
    """
    state = T.root_state
    for level in range(depth):
        if T.splits(state):
            break
        first = next(iter(T.step(state)), None)
        if first is None:
            raise TreeError(f"dead end at level {level}")
        state = first[1]
    else:
        raise TreeError(f"no branching node within depth {depth}")
    return _omega_thin(T, plan, laver=False)


def laver_incompatibility(S1: LazyTree, S2: LazyTree, divergence_level: int, D: int, value_bound: int) -> IncompatibilityCertificate:
    return omega_incompatibility(S1, S2, divergence_level, D, value_bound, kind="laver")


def miller_incompatibility(S1: LazyTree, S2: LazyTree, divergence_level: int, D: int, value_bound: int) -> IncompatibilityCertificate:
    return omega_incompatibility(S1, S2, divergence_level, D, value_bound, kind="miller")


def audit_omega_thin(T: LazyTree, S: LazyTree, plan: ThinPlan, D: int, value_bound: int) -> ThinAudit:
    """Scan a thinned omega tree against its input and plan to depth ``D``.

    At every node of ``S`` with two or more successors below ``value_bound``:
    those successors must lie in designated sub-blocks of enforced blocks, and
    each enforced designated sub-block below the bound must be hit.  Nodes
    reached in an already examined pair of states are skipped.
    """
    X, h = plan.X, plan.h
    designated = [(i, *block(X, i, h(i))) for i in plan.enforced]
    contained = True
    forbidden: list[Node] = []
    missing: list[tuple[int, Node]] = []
    seen = {(S.root_state, T.root_state)}
    frontier: list[tuple[Node, Hashable, Hashable]] = [((), S.root_state, T.root_state)]
    while frontier and len(frontier[0][0]) < D:
        nxt = []
        for node, s, t in frontier:
            succ = S.successors(s, value_bound)
            kt = dict(T.successors(t, value_bound))
            if len(succ) >= 2:
                if any(not any(lo <= e < hi for _, lo, hi in designated) for e, _ in succ):
                    forbidden.append(node)
                for i, lo, hi in designated:
                    if hi <= value_bound and not any(lo <= e < hi for e, _ in succ):
                        missing.append((i, node))
            for e, ns in succ:
                if e not in kt:
                    contained = False
                    continue
                if (ns, kt[e]) not in seen:
                    seen.add((ns, kt[e]))
                    nxt.append((node + (e,), ns, kt[e]))
        frontier = nxt
    return ThinAudit(D, contained, tuple(forbidden), tuple(missing))


def omega_antichain(
    X: EnumeratedSet,
    T: LazyTree,
    count: int,
    i_max: int,
    D: int | None,
    value_bound: int,
    kind: str = "laver",
    jobs: int = 1,
) -> AntichainResult:
    """Thin one Laver (or Miller) tree with ``count`` eventually-different colorings and certify every pair.

    Blocks ``0 .. i_max`` are all enforced.  The pair ``(a, b)`` is checked
    against the value threshold ``mu(2^k)``, ``k`` the first index from which
    the colorings differ, to depth ``D`` (twice the threshold when ``None``).
    """
    if kind not in ("laver", "miller"):
        raise TreeError(f"unknown omega forcing {kind!r}")
    plans = [ThinPlan(X, h, tuple(range(i_max + 1))) for h in ev_diff_family(count)]
    if kind == "laver":
        members = [(laver_thin(T, p), p) for p in plans]
    else:
        members = [(miller_thin(T, p, value_bound), p) for p in plans]

    def certify(a: int, b: int) -> IncompatibilityCertificate:
        div = divergence_level(X, a, b)
        return omega_incompatibility(members[a][0], members[b][0], div, 2 * div if D is None else D, value_bound, kind)

    return AntichainResult(tuple(members), certify_pairs(count, certify, jobs))
