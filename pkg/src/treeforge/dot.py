"""Deterministic Graphviz DOT text for finite trees."""

from __future__ import annotations

from collections.abc import Iterable

from .trees import FiniteTree, Node, ramification_points


def _name(node: Node) -> str:
    return '"r"' if not node else '"r.' + ".".join(map(str, node)) + '"'


def _label(node: Node) -> str:
    return "∅" if not node else "".join(map(str, node)) if all(e < 10 for e in node) else ",".join(map(str, node))


def to_dot(
    T: FiniteTree,
    title: str = "tree",
    enforced_levels: Iterable[tuple[int, int, int]] = (),
    highlight_from: int | None = None,
) -> str:
    """DOT text with ramification points double-circled.

    ``enforced_levels`` holds ``(block, lo, hi)`` triples recorded as comments.
    With ``highlight_from``, ramification points at or above that level are
    drawn in red (a certificate violation when the tree is an intersection).
    """
    ram = ramification_points(T)
    levels = sorted({len(t) for t in ram})
    lines = [f"digraph {_quote(title)} {{"]
    lines.append(f"  // ramification levels: {', '.join(map(str, levels))}")
    for i, lo, hi in enforced_levels:
        lines.append(f"  // enforced block {i}: levels [{lo}, {hi})")
    if highlight_from is not None:
        lines.append(f"  // divergence level: {highlight_from}")
    lines.append("  node [shape=circle, fontsize=10];")
    for t in T.sorted_nodes:
        attrs = [f'label="{_label(t)}"']
        if t in ram:
            attrs.append("shape=doublecircle")
            if highlight_from is not None and len(t) >= highlight_from:
                attrs.append("color=red")
        lines.append(f"  {_name(t)} [{', '.join(attrs)}];")
    for t in T.sorted_nodes:
        if t:
            lines.append(f"  {_name(t[:-1])} -> {_name(t)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'
