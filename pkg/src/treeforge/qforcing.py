"""The finite-condition poset for adding a skew tree that avoids a list of given trees.

A condition ``(n, F, side)`` is a finite skew tree ``F`` of height ``n`` whose
level-``n`` nodes each carry a perfect side tree through which ``F`` may grow.
The three extension moves (amalgamation, two-extension, avoidance) and a
sequential runner are provided.  Every nondeterministic choice is resolved
lexicographically least.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

from .surgery.certificates import IncompatibilityCertificate, sacks_incompatibility
from .surgery.sacks import ramifying_extension
from .trees import FiniteTree, LazyTree, Node, TreeError, cut, is_prefix, is_skew

DEFAULT_HORIZON = 64


class QError(ValueError):
    def __init__(self, message: str, leaf: Node | None = None) -> None:
        super().__init__(message if leaf is None else f"{message} (leaf {list(leaf)})")
        self.leaf = leaf


@dataclass(frozen=True)
class QCondition:
    n: int
    F: FiniteTree
    side: tuple[tuple[Node, LazyTree], ...]

    def __post_init__(self) -> None:
        side = tuple(sorted(((tuple(t), S) for t, S in dict(self.side).items()), key=lambda p: p[0]))
        object.__setattr__(self, "side", side)

    @classmethod
    def make(cls, n: int, F: FiniteTree, side: dict) -> QCondition:
        return cls(n, F, tuple(side.items()))

    @property
    def leaves(self) -> list[Node]:
        return [t for t, _ in self.side]

    def side_tree(self, leaf: Sequence[int]) -> LazyTree:
        leaf = tuple(leaf)
        for t, S in self.side:
            if t == leaf:
                return S
        raise QError("no side tree at this node", leaf)


def seed(S: LazyTree) -> QCondition:
    """The weakest condition ``(0, {root}, <S>)``."""
    return QCondition(0, FiniteTree(frozenset({()})), (((), S),))


@dataclass(frozen=True)
class ForbiddenList:
    trees: tuple[LazyTree, ...]
    depth: int = 12

    def certify(self, S: LazyTree, leaf: Node, alpha: int) -> IncompatibilityCertificate:
        return certify_against(S, self.trees[alpha], leaf, self.depth)


def certify_against(S: LazyTree, T: LazyTree, leaf: Node, depth: int) -> IncompatibilityCertificate:
    """Incompatibility of a side tree with ``T`` over the ``depth`` levels below its leaf.

    Shared ramification points are allowed only in the first half of that window.
    """
    base = len(leaf)
    return sacks_incompatibility(S, T, base + depth // 2, base + depth)


@dataclass(frozen=True)
class QVerdict:
    ok: bool
    errors: tuple[str, ...]
    certificates: tuple[tuple[Node, int, IncompatibilityCertificate], ...] = ()


def _stem_is(S: LazyTree, t: Node) -> bool:
    """``S`` has no split strictly below ``len(t)`` and runs through ``t``."""
    state = S.root_state
    for e in t:
        succ = S.successors(state)
        if len(succ) != 1 or succ[0][0] != e:
            return False
        state = succ[0][1]
    return True


def q_validate(c: QCondition, forbidden: ForbiddenList | None = None) -> QVerdict:
    errors: list[str] = []
    F, n = c.F, c.n
    if F.width != 2:
        errors.append("F must be a binary tree")
    if F.depth > n:
        errors.append(f"F has nodes above the height {n}")
    short = [t for t in F.leaves if len(t) != n]
    if short:
        errors.append(f"maximal nodes not at height {n}: {[list(t) for t in short]}")
    if F.width == 2 and not is_skew(F):
        errors.append("F is not skew")
    top = set(F.level(n))
    keys = set(c.leaves)
    if keys != top:
        errors.append(
            f"side trees must be attached exactly to the level-{n} nodes: "
            f"missing {sorted(map(list, top - keys))}, extra {sorted(map(list, keys - top))}"
        )
    certs = []
    for t, S in c.side:
        if S.width != 2:
            errors.append(f"side tree at {list(t)} is not binary")
            continue
        if not _stem_is(S, t):
            errors.append(f"side tree at {list(t)} does not run as a single chain through {list(t)}")
            continue
        if forbidden is not None:
            for alpha in range(len(forbidden.trees)):
                cert = forbidden.certify(S, t, alpha)
                certs.append((t, alpha, cert))
                if not cert.ok:
                    errors.append(f"side tree at {list(t)} is not certified incompatible with forbidden tree {alpha}")
    return QVerdict(not errors, tuple(errors), tuple(certs))


def q_leq(c0: QCondition, c1: QCondition) -> bool:
    """Whether ``c1`` extends ``c0``: same tree up to ``n0``, side trees restricted along new leaves."""
    if c1.n < c0.n:
        return False
    if cut(c1.F, c0.n).nodes != c0.F.nodes:
        return False
    for t, S0 in c0.side:
        found = False
        for s, S1 in c1.side:
            if not is_prefix(t, s):
                continue
            try:
                if S1 == S0.restrict(s):
                    found = True
                    break
            except TreeError:
                continue
        if not found:
            return False
    return True


def _extend_leftmost(S: LazyTree, node: Node, height: int) -> Node:
    """Lexicographically least extension of ``node`` in ``S`` of length ``height``."""
    state = S.walk(node)
    if state is None:
        raise QError("node is not in its side tree", node)
    stack = [(node, state)]
    while stack:
        v, s = stack.pop()
        if len(v) == height:
            return v
        for e, nxt in reversed(S.successors(s)):
            stack.append((v + (e,), nxt))
    raise QError(f"side tree has no extension to height {height}", node)


def _assemble(c: QCondition, new_leaves: dict[Node, LazyTree], height: int) -> QCondition:
    nodes = set(c.F.nodes)
    for v in new_leaves:
        nodes.update(v[:k] for k in range(len(v) + 1))
    return QCondition(height, FiniteTree(frozenset(nodes)), tuple(new_leaves.items()))


def q_amalgamate(ci: QCondition, cj: QCondition, horizon: int = DEFAULT_HORIZON) -> QCondition:
    """A common extension of two conditions with the same ``(n, F)``.

    Every leaf ``t`` gets a divergence node ``d`` (common to both side trees)
    with successors ``a`` in ``S^i_t`` and ``b != a`` in ``S^j_t``.
    Divergence levels are pairwise distinct so the result stays skew; among
    such assignments the one with the least top level is used.  The left
    branch continues in ``S^i_t`` and the right one in ``S^j_t``, both up to
    ``n* = 1 + max |d|``.
    """
    if ci.n != cj.n or ci.F.nodes != cj.F.nodes or ci.leaves != cj.leaves:
        raise QError("amalgamation needs two conditions with the same height and tree")
    options = {}
    for t in ci.leaves:
        found = _divergences(ci.side_tree(t), cj.side_tree(t), t, horizon)
        if not found:
            raise QError(f"side trees have no divergence below height {horizon}", t)
        options[t] = found
    choice = _distinct_levels(options)
    if choice is None:
        raise QError(f"no skew choice of divergences below height {horizon}", ci.leaves[-1])
    height = 1 + max(len(d) for d, _, _ in choice.values())
    new: dict[Node, LazyTree] = {}
    for t in ci.leaves:
        d, a, b = choice[t]
        Si, Sj = ci.side_tree(t), cj.side_tree(t)
        left = _extend_leftmost(Si, d + (a,), height)
        right = _extend_leftmost(Sj, d + (b,), height)
        new[left] = Si.restrict(left)
        new[right] = Sj.restrict(right)
    return _assemble(ci, new, height)


def _divergences(Si: LazyTree, Sj: LazyTree, t: Node, horizon: int) -> dict:
    """Level -> least ``(d, a, b)`` there, for every level below ``horizon`` where the two trees can part."""
    si, sj = Si.walk(t), Sj.walk(t)
    if si is None or sj is None:
        return {}
    out = {}
    frontier: list[tuple[Node, Hashable, Hashable]] = [(t, si, sj)]
    while frontier and len(frontier[0][0]) < horizon:
        level = len(frontier[0][0])
        nxt = []
        seen: set = set()
        for node, a_state, b_state in frontier:
            ka = dict(Si.successors(a_state))
            kb = dict(Sj.successors(b_state))
            if level not in out:
                for a in sorted(ka):
                    pick = [b for b in sorted(kb) if b != a]
                    if pick:
                        out[level] = (node, a, pick[0])
                        break
            for e in sorted(ka):
                if e in kb and (ka[e], kb[e]) not in seen:
                    seen.add((ka[e], kb[e]))
                    nxt.append((node + (e,), ka[e], kb[e]))
        frontier = nxt
    return out


def _distinct_levels(options: dict) -> dict | None:
    """One option per leaf at pairwise distinct levels, keeping the top level least."""
    top_levels = sorted({lv for found in options.values() for lv in found})
    for top in top_levels:
        owner: dict[int, Node] = {}

        def place(t, tried) -> bool:
            for lv in sorted(options[t]):
                if lv > top or lv in tried:
                    continue
                tried.add(lv)
                if lv not in owner or place(owner[lv], tried):
                    owner[lv] = t
                    return True
            return False

        if all(place(t, set()) for t in options):
            return {t: options[t][lv] for lv, t in owner.items()}
    return None


def q_ensure_compatible(c: QCondition, t0: Sequence[int], horizon: int = DEFAULT_HORIZON) -> QCondition:
    """Extend ``c`` so that ``t0`` gets two extensions inside its side tree."""
    t0 = tuple(t0)
    if t0 not in c.leaves:
        raise QError("not a leaf of the condition", t0)
    S = c.side_tree(t0)
    state = S.walk(t0)
    path = None if state is None else ramifying_extension(S, state, max(horizon - len(t0), 0))
    if path is None:
        raise QError(f"side tree does not ramify above the leaf below height {horizon}", t0)
    u = t0 + path
    height = len(u) + 1
    new: dict[Node, LazyTree] = {}
    for t in c.leaves:
        if t == t0:
            for e in S.children(u):
                new[u + (e,)] = S.restrict(u + (e,))
        else:
            St = c.side_tree(t)
            v = _extend_leftmost(St, t, height)
            new[v] = St.restrict(v)
    return _assemble(c, new, height)


def q_avoid(
    c: QCondition,
    T_alpha: LazyTree,
    depth: int = 12,
    horizon: int = DEFAULT_HORIZON,
) -> tuple[QCondition, tuple[tuple[Node, IncompatibilityCertificate], ...]]:
    """Extend ``c`` so that no new leaf is a node of ``T_alpha``.

    Each side tree must first be certified incompatible with ``T_alpha`` to
    ``depth`` levels below its leaf.  Returns the extension and the certificates.
    """
    certs = []
    for t, S in c.side:
        cert = certify_against(S, T_alpha, t, depth)
        certs.append((t, cert))
        if not cert.ok:
            raise QError("side tree is not certified incompatible with the tree to avoid", t)
    escape: dict[Node, Node] = {}
    for t, S in c.side:
        v = _escape(S, T_alpha, t, horizon)
        if v is None:
            raise QError(f"no node outside the tree to avoid below height {horizon}", t)
        escape[t] = v
    height = max([c.n + 1] + [len(v) for v in escape.values()])
    new: dict[Node, LazyTree] = {}
    for t, S in c.side:
        w = _extend_leftmost(S, escape[t], height)
        new[w] = S.restrict(w)
    return _assemble(c, new, height), tuple(certs)


def _escape(S: LazyTree, T: LazyTree, t: Node, horizon: int) -> Node | None:
    """Least-level, then lexicographically least, node of ``S`` above ``t`` outside ``T``."""
    s, u = S.walk(t), T.walk(t)
    if s is None:
        return None
    frontier: list[tuple[Node, Hashable, Hashable]] = [(t, s, u)]
    while frontier and len(frontier[0][0]) <= horizon:
        for node, _, b in frontier:
            if b is None:
                return node
        nxt = []
        seen: set = set()
        for node, a, b in frontier:
            kb = dict(T.successors(b))
            for e, na in S.successors(a):
                nb = kb.get(e)
                if (na, nb) not in seen:
                    seen.add((na, nb))
                    nxt.append((node + (e,), na, nb))
        frontier = nxt
    return None


# Generic runs


@dataclass(frozen=True)
class TraceStep:
    task: dict
    condition: QCondition
    certificates: tuple = ()
    avoid_height: int | None = None


class RunAborted(QError):
    def __init__(self, trace: list[TraceStep], cause: Exception) -> None:
        ValueError.__init__(self, f"run aborted after {len(trace)} steps: {cause}")
        self.leaf = getattr(cause, "leaf", None)
        self.trace = trace
        self.cause = cause


@dataclass(frozen=True)
class RunResult:
    F: FiniteTree
    trace: tuple[TraceStep, ...]
    final: QCondition


TASKS = ("grow-split", "avoid", "ensure-compatible")


def _select(c: QCondition, selector) -> Node:
    leaves = c.leaves
    if isinstance(selector, int):
        return leaves[selector % len(leaves)]
    node = tuple(selector)
    if node not in leaves:
        raise QError("selector does not name a leaf", node)
    return node


def q_generic_run(
    seed_condition: QCondition,
    forbidden: ForbiddenList,
    schedule: Sequence[dict],
    horizon: int = DEFAULT_HORIZON,
) -> RunResult:
    """Fold the schedule over the seed with the three extension moves.

    Tasks are one-key dicts: ``{"grow-split": sel}`` and
    ``{"ensure-compatible": sel}`` both split the selected leaf inside its side
    tree (the latter also records the two new extensions), ``{"avoid": k}``
    moves every leaf out of forbidden tree ``k``.  A leaf selector is an index
    into the sorted leaves (taken modulo their number) or an explicit node.
    """
    c = seed_condition
    trace: list[TraceStep] = []
    for task in schedule:
        try:
            if not isinstance(task, dict) or len(task) != 1 or next(iter(task)) not in TASKS:
                raise QError(f"unknown task {task!r}")
            kind, arg = next(iter(task.items()))
            if kind == "avoid":
                if not isinstance(arg, int) or not 0 <= arg < len(forbidden.trees):
                    raise QError(f"no forbidden tree with index {arg!r}")
                nxt, certs = q_avoid(c, forbidden.trees[arg], forbidden.depth, horizon)
                step = TraceStep(task, nxt, tuple(cert for _, cert in certs), nxt.n)
            else:
                t0 = _select(c, arg)
                nxt = q_ensure_compatible(c, t0, horizon)
                checks: tuple = ()
                if kind == "ensure-compatible":
                    checks = (two_extension_check(c, nxt, t0),)
                step = TraceStep(task, nxt, checks)
        except (QError, TreeError) as exc:
            raise RunAborted(trace, exc) from exc
        trace.append(step)
        c = nxt
    return RunResult(c.F, tuple(trace), c)


def two_extension_check(before: QCondition, after: QCondition, t0: Node) -> dict:
    """New leaves extending ``t0`` that are nodes of its old side tree."""
    S = before.side_tree(t0)
    ext = [v for v in after.leaves if is_prefix(t0, v) and v in S]
    return {"check": "two-extensions", "leaf": list(t0), "extensions": [list(v) for v in ext], "ok": len(ext) >= 2}


# JSON


def condition_to_json(c: QCondition) -> dict:
    return {
        "n": c.n,
        "F": c.F.to_json(),
        "side": [{"leaf": list(t), "tree": S.ref} for t, S in c.side],
    }


def condition_from_json(data: dict, resolve: Callable[[Any], LazyTree]) -> QCondition:
    try:
        F = FiniteTree.from_json(data["F"])
        side = {tuple(entry["leaf"]): resolve(entry["tree"]) for entry in data["side"]}
        return QCondition(int(data["n"]), F, tuple(side.items()))
    except (KeyError, TypeError) as exc:
        raise QError(f"malformed condition JSON: {exc}") from exc


def trace_to_json(trace: Sequence[TraceStep]) -> list[dict]:
    out = []
    for step in trace:
        certs = [c.to_json() if isinstance(c, IncompatibilityCertificate) else c for c in step.certificates]
        entry = {"task": step.task, "condition": condition_to_json(step.condition), "certificates": certs}
        if step.avoid_height is not None:
            entry["avoid_height"] = step.avoid_height
        out.append(entry)
    return out
