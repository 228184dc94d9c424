"""Resolve JSON tree references back into lazy trees.

A reference is what ``LazyTree.ref`` holds, so ``resolve_tree(T.ref) == T``
for every tree this package builds from data.  Accepted forms:

* ``"full-binary"``, ``"chain"``, ``"cone:0110"``
* ``{"width": .., "nodes": [..]}`` an explicit finite tree
* ``{"restrict": ref, "at": [..]}``
* ``{"thinned": {"tree": ref, "plan": ThinPlan}}`` (Sacks on binary trees, Laver/Miller on omega)
* ``{"automaton": {"start": s, "states": {s: [[entry, next], ..]}, "width": ..}}``
* ``{"laver": ..}``, ``{"miller": ..}``, ``{"silver": ..}``
"""

from __future__ import annotations

from typing import Any

from .baire import EnumerationError, set_from_json
from .surgery.coloring import ColoringError, ThinPlan
from .surgery.omega import laver_thin, laver_tree, miller_thin, miller_tree
from .surgery.sacks import sacks_thin
from .surgery.silver import SilverCondition, silver_from_json, silver_lazy, silver_thin
from .trees import OMEGA, FiniteTree, LazyTree, TreeError, automaton_tree, from_finite, full_binary, leftmost_chain


MILLER_SEARCH_DEPTH = 64


class RegistryError(ValueError):
    pass


def _named(name: str) -> LazyTree:
    if name == "full-binary":
        return full_binary()
    if name == "chain":
        return leftmost_chain()
    if name.startswith("cone:"):
        digits = name[len("cone:") :].strip("<>⟨⟩")
        if any(c not in "01" for c in digits):
            raise RegistryError(f"bad cone node {digits!r}")
        return full_binary().restrict(tuple(int(c) for c in digits))
    raise RegistryError(f"unknown tree name {name!r}")


def resolve_silver(spec: Any) -> SilverCondition:
    if isinstance(spec, dict) and "thinned" in spec:
        body = spec["thinned"]
        return silver_thin(resolve_silver(body["condition"]), ThinPlan.from_json(body["plan"]))
    return silver_from_json(spec)


def resolve_tree(ref: Any) -> LazyTree:
    try:
        return _resolve(ref)
    except RegistryError:
        raise
    except (TreeError, EnumerationError, ColoringError, KeyError, TypeError, ValueError) as exc:
        raise RegistryError(f"cannot resolve tree reference {ref!r}: {exc}") from exc


def _resolve(ref: Any) -> LazyTree:
    if isinstance(ref, str):
        return _named(ref)
    if not isinstance(ref, dict):
        raise RegistryError(f"tree reference must be a string or an object, got {ref!r}")
    if "nodes" in ref:
        return from_finite(FiniteTree.from_json(ref))
    if len(ref) == 2 and "restrict" in ref:
        return _resolve(ref["restrict"]).restrict(tuple(ref["at"]))
    if len(ref) != 1:
        raise RegistryError(f"unrecognized tree reference {ref!r}")
    (kind, body), = ref.items()
    if kind == "thinned":
        base = _resolve(body["tree"])
        plan = ThinPlan.from_json(body["plan"])
        if base.width == OMEGA:
            # Laver and Miller thinning share a reference; a Laver base gets the stricter check
            if isinstance(base.ref, dict) and "laver" in base.ref:
                return laver_thin(base, plan)
            return miller_thin(base, plan, MILLER_SEARCH_DEPTH)
        return sacks_thin(base, plan)
    if kind == "automaton":
        width = body.get("width", 2)
        return automaton_tree({s: [tuple(p) for p in v] for s, v in body["states"].items()}, body["start"], width)
    if kind == "laver":
        return laver_tree(set_from_json(body["successors"]), body.get("stem", ()))
    if kind == "miller":
        return miller_tree(set_from_json(body["successors"]), int(body["period"]), int(body.get("offset", 0)))
    if kind == "silver":
        return silver_lazy(resolve_silver(body))
    raise RegistryError(f"unknown tree reference kind {kind!r}")
