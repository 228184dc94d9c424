"""Finite and lazily generated trees, with the structural predicates built on them.

A node is a tuple of naturals.  Binary trees (width 2) have entries in {0, 1};
trees on omega (width ``OMEGA``) have arbitrary natural entries.

``FiniteTree`` is an explicit prefix-closed node set.  ``LazyTree`` is a state
machine: every node carries a hashable state, and the successors of a node
depend only on its state.  Scans that quantify over "every node at level n"
therefore only need one representative per distinct state, which keeps
exhaustive checks on infinite trees finite and exact.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import islice
from typing import Any, Callable, Hashable, Iterable, Iterator, Sequence

Node = tuple[int, ...]
OMEGA = "omega"

Step = Callable[[Hashable], Iterable[tuple[int, Hashable]]]


class TreeError(ValueError):
    """Raised for malformed trees or arguments outside an operation's domain."""


class DeadEndError(TreeError):
    """A lazy tree produced a node without successors where one was required."""

    def __init__(self, node: Node, message: str = "") -> None:
        super().__init__(message or f"dead end at node {list(node)}")
        self.node = node


def _check_width(width) -> None:
    if width != 2 and width != OMEGA:
        raise TreeError(f"width must be 2 or {OMEGA!r}, got {width!r}")


def is_prefix(s: Node, t: Node) -> bool:
    return len(s) <= len(t) and t[: len(s)] == s


def comparable(s: Node, t: Node) -> bool:
    return is_prefix(s, t) or is_prefix(t, s)


# Finite trees


@dataclass(frozen=True)
class FiniteTree:
    nodes: frozenset
    width: int | str = 2

    def __post_init__(self) -> None:
        _check_width(self.width)
        nodes = frozenset(tuple(int(e) for e in n) for n in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if () not in nodes:
            raise TreeError("a tree must contain the root")
        for n in nodes:
            if n and n[:-1] not in nodes:
                raise TreeError(f"not prefix-closed: {list(n)} is present but its parent is not")
            for e in n:
                if e < 0 or (self.width == 2 and e > 1):
                    raise TreeError(f"entry {e} of {list(n)} violates width {self.width}")

    @classmethod
    def _trusted(cls, nodes: frozenset, width: int | str = 2) -> FiniteTree:
        # nodes already prefix-closed tuples of valid entries
        tree = object.__new__(cls)
        object.__setattr__(tree, "nodes", nodes)
        object.__setattr__(tree, "width", width)
        return tree

    @classmethod
    def from_branches(cls, branches: Iterable[Sequence[int]], width: int | str = 2) -> FiniteTree:
        """Prefix closure of the given branches (the root is always included)."""
        nodes = {()}
        for b in branches:
            b = tuple(b)
            nodes.update(b[:k] for k in range(len(b) + 1))
        return cls(frozenset(nodes), width)

    @classmethod
    def full_binary(cls, depth: int) -> FiniteTree:
        nodes = {()}
        level = [()]
        for _ in range(depth):
            level = [n + (e,) for n in level for e in (0, 1)]
            nodes.update(level)
        return cls(frozenset(nodes))

    def __contains__(self, node) -> bool:
        return tuple(node) in self.nodes

    def __iter__(self) -> Iterator[Node]:
        return iter(self.sorted_nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def sorted_nodes(self) -> tuple[Node, ...]:
        return tuple(sorted(self.nodes))

    @cached_property
    def depth(self) -> int:
        return max(len(n) for n in self.nodes)

    @cached_property
    def children_map(self) -> dict[Node, tuple[int, ...]]:
        kids: dict[Node, list[int]] = {n: [] for n in self.nodes}
        for n in self.nodes:
            if n:
                kids[n[:-1]].append(n[-1])
        return {n: tuple(v) if len(v) < 2 else tuple(sorted(v)) for n, v in kids.items()}

    def children(self, node: Node) -> tuple[int, ...]:
        return self.children_map.get(tuple(node), ())

    def level(self, n: int) -> list[Node]:
        return sorted(t for t in self.nodes if len(t) == n)

    @cached_property
    def leaves(self) -> tuple[Node, ...]:
        kids = self.children_map
        return tuple(sorted(t for t in self.nodes if not kids[t]))

    def to_json(self) -> dict:
        return {"width": self.width, "nodes": [list(n) for n in self.sorted_nodes]}

    @classmethod
    def from_json(cls, data: dict) -> FiniteTree:
        try:
            width = data.get("width", 2)
            nodes = data["nodes"]
        except (AttributeError, KeyError) as exc:
            raise TreeError(f"malformed FiniteTree JSON: {data!r}") from exc
        return cls(frozenset(tuple(n) for n in nodes), width)


def restrict(T: FiniteTree, t: Sequence[int]) -> FiniteTree:
    """The cone ``{s in T : s is a prefix of t or t is a prefix of s}``."""
    t = tuple(t)
    if t not in T.nodes:
        raise TreeError(f"{list(t)} is not a node of the tree")
    return FiniteTree._trusted(frozenset(s for s in T.nodes if comparable(s, t)), T.width)


def cut(T: FiniteTree, D: int) -> FiniteTree:
    """Nodes of a finite tree of length at most ``D``."""
    if D >= T.depth:
        return T
    return FiniteTree._trusted(frozenset(s for s in T.nodes if len(s) <= D), T.width)


def intersection(T1: FiniteTree, T2: FiniteTree) -> FiniteTree:
    if T1.width != T2.width:
        raise TreeError("cannot intersect trees of different widths")
    return FiniteTree._trusted(T1.nodes & T2.nodes, T1.width)


def ramification_points(T: FiniteTree) -> frozenset[Node]:
    return frozenset(t for t, kids in T.children_map.items() if len(kids) >= 2)


def ramification_ranks(T: FiniteTree) -> dict[Node, int]:
    """Rank of every ramification point: how many proper prefixes also ramify."""
    kids = T.children_map
    ranks: dict[Node, int] = {}
    stack: list[tuple[Node, int]] = [((), 0)]
    while stack:
        node, below = stack.pop()
        splits = len(kids[node]) >= 2
        if splits:
            ranks[node] = below
        for e in kids[node]:
            stack.append((node + (e,), below + splits))
    return ranks


def ramification_rank(T: FiniteTree, t: Sequence[int]) -> int:
    t = tuple(t)
    if len(T.children(t)) < 2:
        raise TreeError(f"{list(t)} is not a ramification point")
    return sum(1 for k in range(len(t)) if len(T.children(t[:k])) >= 2)


def ramifies_below(T: FiniteTree, s: Sequence[int], k: int, strict: bool = False) -> Node | None:
    """Witness that ``s`` ramifies in ``T`` below level ``k``, or ``None``.

    Strict mode wants a ramifying extension of length ``< k - 1``; the default
    inclusive mode accepts length ``< k``.  The witness is the lexicographically
    least ramifying extension of least length.
    """
    s = tuple(s)
    if s not in T.nodes:
        raise TreeError(f"{list(s)} is not a node of the tree")
    if k <= len(s):
        raise TreeError(f"level bound {k} must exceed |s| = {len(s)}")
    limit = k - 1 if strict else k
    level = [s]
    while level and len(level[0]) < limit:
        for t in level:
            if len(T.children(t)) >= 2:
                return t
        level = [t + (e,) for t in level for e in T.children(t)]
    return None


def is_skew(T: FiniteTree) -> bool:
    if T.width != 2:
        raise TreeError("skewness is defined for binary trees")
    seen: set[int] = set()
    for t in ramification_points(T):
        if len(t) in seen:
            return False
        seen.add(len(t))
    return True


def tree_leq(T: FiniteTree, T2: FiniteTree) -> bool:
    """``T <= T2`` in the forcing order: the stronger tree ``T2`` is a subset."""
    if T.width != T2.width:
        raise TreeError("trees of different widths are incomparable")
    return T2.nodes <= T.nodes


def tree_leq_n(T: FiniteTree, T2: FiniteTree, n: int, strict: bool = False) -> bool:
    """``T <=_n T2``: ``T <= T2`` and ramification points of rank <= n survive.

    Literal mode only asks that such points remain nodes of ``T2``; strict mode
    asks that they still ramify there.
    """
    if not tree_leq(T, T2):
        return False
    for t, rank in ramification_ranks(T).items():
        if rank > n:
            continue
        if t not in T2.nodes:
            return False
        if strict and len(T2.children(t)) < 2:
            return False
    return True


@dataclass(frozen=True)
class FusionResult:
    tree: FiniteTree
    # rank k -> first index from which the rank-<=k ramification points stay fixed
    stabilization: dict[int, int]


class FusionError(TreeError):
    def __init__(self, index: int) -> None:
        super().__init__(f"fusion chain breaks at index {index}: seq[{index}] <=_{index} seq[{index + 1}] fails")
        self.index = index


def stabilized_fusion(seq: Sequence[FiniteTree], D: int) -> FusionResult:
    """Intersection of a finite fusion sequence, with a stabilization report."""
    if not seq:
        raise TreeError("fusion needs a nonempty sequence")
    trees = [cut(T, D) for T in seq]
    for m in range(len(trees) - 1):
        if not tree_leq_n(trees[m], trees[m + 1], m, strict=True):
            raise FusionError(m)
    nodes = trees[0].nodes
    for T in trees[1:]:
        nodes = nodes & T.nodes
    result = FiniteTree(nodes, trees[0].width)

    ranks = [ramification_ranks(T) for T in trees]
    stabilization: dict[int, int] = {}
    for k in range(len(trees) - 1):
        sets = [frozenset(t for t, r in rk.items() if r <= k) for rk in ranks]
        start = len(sets) - 1
        while start > 0 and sets[start - 1] == sets[-1]:
            start -= 1
        stabilization[k] = start
    return FusionResult(result, stabilization)


# Lazy trees


@dataclass(frozen=True)
class SplittingBound:
    """Gap function: a node at depth d has a splitting descendant within ``gap(d)`` levels."""

    gap: Callable[[int], int]
    description: str = ""

    @classmethod
    def constant(cls, b: int) -> SplittingBound:
        if b < 1:
            raise TreeError("splitting gaps are at least 1")
        return cls(lambda d: b, f"constant:{b}")

    def __call__(self, depth: int) -> int:
        g = self.gap(depth)
        if g < 1:
            raise TreeError(f"splitting gap at depth {depth} is {g} < 1")
        if depth > 0 and self.gap(depth - 1) > g:
            raise TreeError(f"splitting bound decreases at depth {depth}")
        return g


def _ref_key(ref: Any) -> str:
    return json.dumps(ref, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True, eq=False)
class LazyTree:
    """An infinite tree given by a successor function on hashable states.

    ``step(state)`` yields ``(entry, next_state)`` pairs in increasing entry
    order; for width ``OMEGA`` the iterable may be infinite.  Two lazy trees are
    equal iff their provenance ``ref`` is equal: extensional equality of
    oracles is not decidable, so identity is "built the same way".
    """

    root_state: Hashable
    step: Step
    width: int | str = 2
    ref: Any = None
    bound: SplittingBound | None = None
    restriction_of: tuple[LazyTree, Node] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        _check_width(self.width)
        if self.root_state is None:
            raise TreeError("None is reserved for absent nodes and cannot be a state")

    @cached_property
    def key(self) -> str:
        return _ref_key(self.ref)

    def __eq__(self, other) -> bool:
        return isinstance(other, LazyTree) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    # successor access

    @cached_property
    def _memo(self) -> dict:
        return {}

    def successors(self, state: Hashable, value_bound: int | None = None) -> list[tuple[int, Hashable]]:
        """Successor (entry, state) pairs; width-omega trees need a value bound.

        Results are memoized per state, so ``step`` must be deterministic.
        """
        hit = self._memo.get((state, value_bound))
        if hit is not None:
            return list(hit)
        out = self._successors(state, value_bound)
        self._memo[(state, value_bound)] = tuple(out)
        return out

    def _successors(self, state: Hashable, value_bound: int | None) -> list[tuple[int, Hashable]]:
        if self.width == 2:
            out = list(self.step(state))
            for e, _ in out:
                if e not in (0, 1):
                    raise TreeError(f"binary oracle produced entry {e}")
        else:
            if value_bound is None:
                raise TreeError("width-omega trees need a value bound")
            out = []
            for e, nxt in self.step(state):
                if e >= value_bound:
                    break
                out.append((e, nxt))
        if any(nxt is None for _, nxt in out):
            raise TreeError("oracle produced None as a state")
        for a, b in zip(out, out[1:]):
            if a[0] >= b[0]:
                raise TreeError(f"successor entries not strictly increasing: {a[0]}, {b[0]}")
        return out

    def splits(self, state: Hashable, value_bound: int | None = None) -> bool:
        """Whether a node in this state has at least two successors."""
        if self.width == 2 or value_bound is not None:
            return len(self.successors(state, value_bound)) >= 2
        return len(list(islice(self.step(state), 2))) >= 2

    def walk(self, node: Sequence[int]) -> Hashable | None:
        """State of ``node``, or ``None`` when the node is not in the tree."""
        state = self.root_state
        for e in node:
            for entry, nxt in self.step(state):
                if entry == e:
                    state = nxt
                    break
                if entry > e:
                    return None
            else:
                return None
        return state

    def __contains__(self, node) -> bool:
        return self.walk(tuple(node)) is not None

    def children(self, node: Sequence[int], value_bound: int | None = None) -> tuple[int, ...]:
        state = self.walk(node)
        if state is None:
            raise TreeError(f"{list(node)} is not a node of the tree")
        return tuple(e for e, _ in self.successors(state, value_bound))

    def level_states(self, n: int, value_bound: int | None = None) -> dict[Hashable, Node]:
        """Distinct states at level ``n``, each with its lexicographically least node."""
        for level, frontier in self.iter_levels(value_bound):
            if level == n:
                return frontier
        return {}

    def iter_levels(self, value_bound: int | None = None) -> Iterator[tuple[int, dict[Hashable, Node]]]:
        """``(n, level_states(n))`` for ``n = 0, 1, ...`` in one pass."""
        frontier: dict[Hashable, Node] = {self.root_state: ()}
        level = 0
        while True:
            yield level, frontier
            nxt: dict[Hashable, Node] = {}
            for state, node in sorted(frontier.items(), key=lambda kv: kv[1]):
                for e, s in self.successors(state, value_bound):
                    if s not in nxt:
                        nxt[s] = node + (e,)
            frontier = nxt
            level += 1

    def restrict(self, t: Sequence[int]) -> LazyTree:
        """The lazy cone ``(T)_t``, canonicalized so provenance tracks identity.

        Restricting along the stem returns the tree itself, and a restriction of
        a restriction collapses to one restriction of the original tree.
        """
        t = tuple(t)
        state = self.root_state
        on_stem = True
        for k, e in enumerate(t):
            kids = dict(islice(self.step(state), e + 1)) if self.width == OMEGA else dict(self.step(state))
            if e not in kids:
                raise TreeError(f"{list(t)} is not a node of the tree")
            if on_stem and self.splits(state):
                on_stem = False
            state = kids[e]
        if on_stem:
            return self
        if self.restriction_of is not None:
            base, t0 = self.restriction_of
            return base.restrict(t if len(t) > len(t0) else t0)
        return LazyTree(
            root_state=(self.root_state, t),
            step=_restricted_step(self.step),
            width=self.width,
            ref={"restrict": self.ref, "at": list(t)},
            bound=None,
            restriction_of=(self, t),
        )

    def truncate(self, D: int, value_bound: int | None = None) -> FiniteTree:
        return truncate(self, D, value_bound)


def _restricted_step(step: Step) -> Step:
    def restricted(state):
        base, rest = state
        for e, nxt in step(base):
            if rest:
                if e == rest[0]:
                    yield e, (nxt, rest[1:])
                    return
                if e > rest[0]:
                    return
            else:
                yield e, (nxt, ())

    return restricted


def truncate(T: LazyTree | FiniteTree, D: int, value_bound: int | None = None) -> FiniteTree:
    """Exactly the nodes of ``T`` of length at most ``D``."""
    if D < 0:
        raise TreeError("truncation depth must be nonnegative")
    if isinstance(T, FiniteTree):
        return cut(T, D)
    if T.width == OMEGA and value_bound is None:
        raise TreeError("width-omega trees need a value bound to truncate")
    nodes = [()]
    stack = [((), T.root_state)]
    while stack:
        node, state = stack.pop()
        if len(node) == D:
            continue
        for e, nxt in T.successors(state, value_bound):
            if not isinstance(e, int) or e < 0 or (T.width == 2 and e > 1):
                raise TreeError(f"entry {e!r} below {list(node)} violates width {T.width}")
            child = node + (e,)
            nodes.append(child)
            stack.append((child, nxt))
    return FiniteTree._trusted(frozenset(nodes), T.width)


def lazy_intersection(
    S: LazyTree, T: LazyTree, D: int, value_bound: int | None = None
) -> FiniteTree:
    """``truncate(S, D) & truncate(T, D)`` without materializing either side."""
    if S.width != T.width:
        raise TreeError("cannot intersect trees of different widths")
    nodes = [()]
    stack = [((), S.root_state, T.root_state)]
    while stack:
        node, a, b = stack.pop()
        if len(node) == D:
            continue
        kb = dict(T.successors(b, value_bound))
        for e, na in S.successors(a, value_bound):
            if e in kb:
                child = node + (e,)
                nodes.append(child)
                stack.append((child, na, kb[e]))
    return FiniteTree(frozenset(nodes), S.width)


@dataclass(frozen=True)
class PerfectReport:
    depth: int
    # (lexicographically least node in the failing state, its level)
    violations: tuple[tuple[Node, int], ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_perfect(T: LazyTree, D: int, value_bound: int | None = None) -> PerfectReport:
    """Check the splitting-bound certificate of ``T`` to depth ``D``.

    Every node at level ``l <= D - gap(l)`` must have a descendant with two
    successors at a level ``< l + gap(l)``.  Also reports dead ends above ``D``.
    """
    if T.bound is None:
        raise TreeError("tree carries no splitting bound")
    violations = []
    frontier: dict[Hashable, Node] = {T.root_state: ()}
    for level in range(D + 1):
        gap = T.bound(level)
        for state, node in sorted(frontier.items(), key=lambda kv: kv[1]):
            if level < D and not T.successors(state, value_bound):
                violations.append((node, level))
            elif level <= D - gap and not _splits_within(T, state, gap, value_bound):
                violations.append((node, level))
        if level == D:
            break
        nxt: dict[Hashable, Node] = {}
        for state, node in sorted(frontier.items(), key=lambda kv: kv[1]):
            for e, s in T.successors(state, value_bound):
                nxt.setdefault(s, node + (e,))
        frontier = nxt
    return PerfectReport(D, tuple(violations))


def _splits_within(T: LazyTree, state: Hashable, levels: int, value_bound: int | None) -> bool:
    frontier = {state}
    for _ in range(levels):
        nxt = set()
        for s in frontier:
            succ = T.successors(s, value_bound)
            if len(succ) >= 2:
                return True
            nxt.update(n for _, n in succ)
        frontier = nxt
    return False


# Stock lazy trees


def _full_binary_step(state):
    return ((0, 0), (1, 0))


def full_binary() -> LazyTree:
    return LazyTree(0, _full_binary_step, 2, "full-binary", SplittingBound.constant(1))


def cone(node: Sequence[int]) -> LazyTree:
    """The full binary tree restricted to ``node``."""
    return full_binary().restrict(tuple(node))


def _leftmost_step(state):
    return ((0, 0),)


def leftmost_chain() -> LazyTree:
    """The single branch of zeros: a degenerate, non-perfect oracle."""
    return LazyTree(0, _leftmost_step, 2, "chain")


def automaton_tree(
    transitions: dict[Hashable, Sequence[tuple[int, Hashable]]],
    start: Hashable,
    width: int | str = 2,
    ref: Any = None,
    bound: SplittingBound | None = None,
) -> LazyTree:
    """Tree generated by a finite transition table ``state -> [(entry, next)]``.

    State names are normalized to strings so the tree round-trips through JSON.
    """
    table = {str(s): tuple(sorted((int(e), str(n)) for e, n in v)) for s, v in transitions.items()}
    start = str(start)
    for s, succ in table.items():
        for _, n in succ:
            if n not in table:
                raise TreeError(f"transition from {s!r} to unknown state {n!r}")
    if start not in table:
        raise TreeError(f"unknown start state {start!r}")

    def step(state):
        return table[state]

    if ref is None:
        ref = {"automaton": {"start": start, "states": {s: [list(p) for p in v] for s, v in sorted(table.items())}}}
        if width != 2:
            ref["automaton"]["width"] = width
    if bound is None and width == 2:
        b = automaton_splitting_gap(table, start)
        if b is not None:
            bound = SplittingBound.constant(b)
    return LazyTree(start, step, width, ref, bound)


def automaton_splitting_gap(table: dict, start: Hashable) -> int | None:
    """Least ``b`` such that every reachable state splits within ``b`` levels."""
    reach = {start}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for _, n in table[s]:
            if n not in reach:
                reach.add(n)
                queue.append(n)
    dist = {s: 0 for s in reach if len(table[s]) >= 2}
    changed = True
    while changed:
        changed = False
        for s in reach:
            options = [dist[n] + 1 for _, n in table[s] if n in dist]
            if s not in dist and options:
                dist[s] = min(options)
                changed = True
            elif s in dist and options and min(options) < dist[s]:
                dist[s] = min(options)
                changed = True
    if any(s not in dist for s in reach):
        return None
    return max(dist.values()) + 1


def from_finite(T: FiniteTree, ref: Any = None) -> LazyTree:
    """View an explicit finite tree as a lazy tree whose nodes are their own states."""
    kids = T.children_map

    def step(node):
        return tuple((e, node + (e,)) for e in kids[node])

    return LazyTree((), step, T.width, ref if ref is not None else T.to_json())


def from_oracle(children: Callable[[Node], Iterable[int]], width: int | str = 2, ref: Any = None) -> LazyTree:
    """Lazy tree from a plain node -> successor-entries oracle."""

    def step(node):
        for e in children(node):
            yield e, node + (e,)

    return LazyTree((), step, width, ref if ref is not None else {"oracle": getattr(children, "__name__", "anonymous")})
