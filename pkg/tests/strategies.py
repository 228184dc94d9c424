from __future__ import annotations

from hypothesis import strategies as st

from treeforge.trees import FiniteTree


@st.composite
def binary_trees(draw, max_depth: int = 5) -> FiniteTree:
    nodes = {()}
    frontier = [()]
    while frontier:
        t = frontier.pop(0)
        if len(t) == max_depth:
            continue
        shape = draw(st.sampled_from(((), (0,), (1,), (0, 1))) if t else st.sampled_from(((0,), (1,), (0, 1))))
        for e in shape:
            nodes.add(t + (e,))
            frontier.append(t + (e,))
    return FiniteTree(frozenset(nodes))


@st.composite
def tree_and_node(draw, max_depth: int = 5):
    T = draw(binary_trees(max_depth))
    return T, draw(st.sampled_from(T.sorted_nodes))
