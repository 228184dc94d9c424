import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from treeforge.baire import affine, explicit, omega
from treeforge.surgery import (
    NoGoodBlocksError,
    NotGoodError,
    OmegaThinningError,
    SilverError,
    ThinPlan,
    antichain_build,
    audit_omega_thin,
    audit_silver_thin,
    audit_thin,
    divergence_index,
    divergence_level,
    ev_diff_family,
    explicit_coloring,
    good_blocks,
    laver_extract_X0,
    laver_incompatibility,
    laver_thin,
    laver_tree,
    laver_weakly_obeys_at,
    locate,
    miller_incompatibility,
    miller_thin,
    miller_tree,
    modular,
    omega_antichain,
    ramifying_extension,
    sacks_incompatibility,
    sacks_thin,
    sacks_weakly_obeys_at,
    silver,
    silver_antichain,
    silver_incompatibility,
    silver_lazy,
    silver_thin,
    silver_to_tree,
    split_permitted,
)
from treeforge.surgery.coloring import ColoringError, coloring_from_json
from treeforge.trees import (
    FiniteTree,
    TreeError,
    automaton_tree,
    full_binary,
    leftmost_chain,
    ramification_points,
    truncate,
)

EVENS = affine(2)
ZERO = modular(0)
ODD_SPLITS = automaton_tree({"e": [(0, "o")], "o": [(0, "e"), (1, "e")]}, "e")
EVERY_THIRD = automaton_tree({"a": [(0, "b"), (1, "b")], "b": [(0, "c")], "c": [(1, "a")]}, "a")


def split_levels(T, D, value_bound=None):
    return sorted({len(t) for t in ramification_points(truncate(T, D, value_bound))})


class TestColorings:
    def test_split_permitted(self):
        assert split_permitted(EVENS, ZERO, 4)
        assert not split_permitted(EVENS, ZERO, 6)
        assert split_permitted(EVENS, modular(5), 0)

    def test_strict_frees_last_level(self):
        assert not split_permitted(EVENS, ZERO, 7)
        assert split_permitted(EVENS, ZERO, 7, strict=True)

    @given(st.integers(1, 5), st.integers(0, 4), st.integers(0, 9), st.integers(0, 200))
    def test_permitted_against_oracle(self, a, b, alpha, level):
        X = affine(a, b)
        assert split_permitted(X, modular(alpha), level) == oracles.permitted(X, modular(alpha), level)
        where = locate(X, level)
        assert where == oracles.block_of(X, level)

    def test_family(self):
        (h0,) = ev_diff_family(1)
        assert [h0(i) for i in range(6)] == [0] * 6
        h2 = ev_diff_family(3)[2]
        assert [h2(i) for i in range(5)] == [0, 0, 2, 2, 2]
        assert divergence_index(1, 2) == 2
        assert divergence_level(EVENS, 1, 2) == 8

    @given(st.integers(0, 60), st.integers(0, 60))
    def test_eventually_different(self, a, b):
        if a == b:
            return
        ha, hb = modular(a), modular(b)
        k = divergence_index(a, b)
        assert all(ha(i) != hb(i) for i in range(k, k + 8))
        # the spec's ceil(log2)+1 index is never earlier
        assert (max(a, b) - 1).bit_length() + 1 >= k if max(a, b) > 0 else True

    def test_coloring_range_enforced(self):
        with pytest.raises(ColoringError):
            explicit_coloring([1])
        with pytest.raises(ColoringError):
            coloring_from_json({"modular": "x"})
        with pytest.raises(ColoringError):
            explicit_coloring([0, 1])(2)

    def test_plan_round_trip(self):
        plan = ThinPlan(EVENS, modular(3), (0, 2), "leftmost", strict=True)
        assert ThinPlan.from_json(plan.to_json()) == plan
        with pytest.raises(ColoringError):
            ThinPlan(EVENS, ZERO, (2, 1))
        with pytest.raises(ColoringError):
            ThinPlan(EVENS, ZERO, (0,), "sideways")


class TestWeaklyObeys:
    def test_full_binary(self):
        assert sacks_weakly_obeys_at(full_binary(), EVENS, 2, strict=True).ok

    def test_chain(self):
        report = sacks_weakly_obeys_at(leftmost_chain(), EVENS, 1)
        assert not report.ok and report.failures == ((0,) * 4, (0,) * 6)

    def test_off_by_one(self):
        assert not sacks_weakly_obeys_at(ODD_SPLITS, EVENS, 1, strict=True).ok
        assert sacks_weakly_obeys_at(ODD_SPLITS, EVENS, 1).ok

    def test_good_blocks(self):
        assert good_blocks(full_binary(), EVENS, 3, strict=True) == [0, 1, 2, 3]
        assert good_blocks(leftmost_chain(), EVENS, 3) == []

    def test_good_blocks_brute_force(self):
        splits = set(range(0, 200, 3))
        expected = [
            i
            for i in range(5)
            if all(any(lv in splits for lv in range(2 * (2**i + j), 2 * (2**i + j + 1))) for j in range(2**i))
        ]
        assert good_blocks(EVERY_THIRD, EVENS, 4) == expected

    def test_ramifying_extension(self):
        assert ramifying_extension(EVERY_THIRD, "b", 5) == (0, 1)
        assert ramifying_extension(EVERY_THIRD, "b", 2) is None


class TestSacksThin:
    def test_constant_coloring(self):
        S = sacks_thin(full_binary(), ThinPlan(EVENS, ZERO, (0, 1, 2, 3)))
        assert split_levels(S, 16) == [0, 1, 2, 4, 8]

    def test_last_sub_blocks(self):
        h = explicit_coloring([0, 1, 3])
        S = sacks_thin(full_binary(), ThinPlan(EVENS, h, (0, 1, 2), "leftmost"))
        assert split_levels(S, 16) == [2, 6, 14]
        assert truncate(S, 2).nodes == {(), (0,), (0, 0)}

    def test_chain_rejected(self):
        with pytest.raises(NotGoodError):
            sacks_thin(leftmost_chain(), ThinPlan(EVENS, ZERO, (0,)))

    def test_strict_mode_frees_last_levels(self):
        S = sacks_thin(full_binary(), ThinPlan(EVENS, ZERO, (0, 1), strict=True))
        assert split_levels(S, 8) == [0, 1, 2, 3, 4, 5, 7]

    def test_ref_resolves(self):
        from treeforge.registry import resolve_tree

        S = sacks_thin(EVERY_THIRD, ThinPlan(EVENS, modular(2), (0,)))
        assert resolve_tree(S.ref) == S
        assert truncate(resolve_tree(S.ref), 20) == truncate(S, 20)

    @settings(max_examples=25, deadline=None)
    @given(st.randoms(use_true_random=False), st.integers(2, 5), st.integers(0, 3), st.integers(0, 7), st.sampled_from(["keep", "leftmost"]))
    def test_contract_against_oracle(self, rng, a, b, alpha, policy):
        T = oracles.random_automaton(rng)
        X = affine(a, b)
        good = good_blocks(T, X, 4)
        if not good:
            return
        plan = ThinPlan(X, modular(alpha), tuple(good[:3]), policy)
        S = sacks_thin(T, plan)
        D = X.mu(16)
        assert oracles.thin_violations(T, S, plan, D) == []
        assert audit_thin(T, S, plan, D).ok

    def test_audit_catches_bad_tree(self):
        plan = ThinPlan(EVENS, ZERO, (0, 1))
        audit = audit_thin(full_binary(), full_binary(), plan, 8)
        assert audit.contained and not audit.ok
        assert (0, 0, 0, 0, 0, 0) in audit.forbidden_splits
        lazy = audit_thin(full_binary(), sacks_thin(full_binary(), ThinPlan(EVENS, ZERO, (0,))), plan, 8)
        assert [i for i, _ in lazy.missing_splits] == [1] * 8


class TestSacksCertificates:
    def test_family_pair(self):
        plans = [ThinPlan(EVENS, h, (0, 1, 2, 3)) for h in ev_diff_family(3)]
        S1, S2 = (sacks_thin(full_binary(), p) for p in plans[1:])
        cert = sacks_incompatibility(S1, S2, 8, 24)
        assert cert.ok and all(lv < 8 for _, lv in cert.shared_ramifications)
        assert cert.to_json()["violations"] == []

    def test_identical_trees(self):
        S = sacks_thin(full_binary(), ThinPlan(EVENS, ZERO, (0, 1, 2)))
        assert not sacks_incompatibility(S, S, 8, 24).ok

    def test_disjoint_cones(self):
        cert = sacks_incompatibility(full_binary().restrict((0,)), full_binary().restrict((1,)), 1, 8)
        assert cert.ok and cert.shared_ramifications == ()

    def test_depth_must_exceed_divergence(self):
        with pytest.raises(TreeError):
            sacks_incompatibility(full_binary(), full_binary(), 5, 5)

    def test_antichain_build(self):
        res = antichain_build(EVENS, [full_binary()] * 4, 4, 40)
        assert len(res.members) == 4 and len(res.certificates) == 6 and res.ok
        assert antichain_build(EVENS, [], 4, 40).members == ()
        with pytest.raises(NoGoodBlocksError) as err:
            antichain_build(EVENS, [leftmost_chain()], 4, 40)
        assert err.value.index == 0

    def test_parallel_matches_serial(self):
        trees = [oracles.random_automaton(random.Random(s)) for s in range(5)]
        X = affine(3, 1)
        serial = antichain_build(X, trees, 4, None, "leftmost")
        parallel = antichain_build(X, trees, 4, None, "leftmost", jobs=4)
        assert {k: v.to_json() for k, v in serial.certificates.items()} == {
            k: v.to_json() for k, v in parallel.certificates.items()
        }


W = omega()


class TestLaver:
    def test_weakly_obeys(self):
        assert laver_weakly_obeys_at(laver_tree(EVENS), (), affine(4), 3)
        powers = laver_tree(explicit([2**k for k in range(12)]))
        assert not laver_weakly_obeys_at(powers, (), EVENS, 3)
        assert all(laver_weakly_obeys_at(laver_tree(W), (), X, i) for X in (EVENS, affine(7, 3)) for i in range(4))

    def test_not_a_ramification_point(self):
        with pytest.raises(TreeError):
            laver_weakly_obeys_at(laver_tree(W, stem=(4,)), (), EVENS, 1)

    def test_extract_X0(self):
        T = laver_tree(affine(2, 2))
        assert laver_extract_X0(T, [()], 100).prefix(5) == [0, 3, 5, 7, 9]
        # successors: positive evens under <0>, positive multiples of 3 under <1>
        mixed = automaton_tree(
            {"r": [(0, "e"), (1, "t")], "e": [(v, "e") for v in range(2, 100, 2)], "t": [(v, "t") for v in range(3, 100, 3)]},
            "r",
            width="omega",
        )
        assert laver_extract_X0(mixed, [(0,), (1,)], 100).prefix(2) == [0, 4]
        with pytest.raises(TreeError):
            laver_extract_X0(laver_tree(affine(1, 100)), [()], 50)

    def test_thin_values(self):
        S = laver_thin(laver_tree(W), ThinPlan(EVENS, ZERO, (0, 1, 2)))
        assert S.children((), 16) == (2, 3, 4, 5, 8, 9)
        assert S.children((4, 9), 16) == (2, 3, 4, 5, 8, 9)
        S = laver_thin(laver_tree(W), ThinPlan(EVENS, explicit_coloring([0, 1, 3]), (0, 1, 2)))
        assert S.children((), 16) == (2, 3, 6, 7, 14, 15)
        S = laver_thin(laver_tree(affine(2, 1)), ThinPlan(EVENS, ZERO, (1,)))
        assert S.children((), 100) == (5,)

    def test_stem_unchanged(self):
        S = laver_thin(laver_tree(W, stem=(7, 40)), ThinPlan(EVENS, ZERO, (0,)))
        assert S.children((), 100) == (7,) and S.children((7,), 100) == (40,)
        assert S.children((7, 40), 100) == (2, 3)

    def test_thin_error_names_block(self):
        with pytest.raises(OmegaThinningError) as err:
            laver_thin(laver_tree(EVENS), ThinPlan(affine(1), ZERO, (0, 1))).children((), 50)
        assert err.value.block == 0

    def test_certificates(self):
        plans = [ThinPlan(EVENS, h, (0, 1, 2, 3)) for h in ev_diff_family(3)]
        S1, S2 = (laver_thin(laver_tree(W), p) for p in plans[1:])
        assert laver_incompatibility(S1, S2, 8, 16, 64).ok
        assert not laver_incompatibility(S1, S1, 8, 16, 64).ok
        stem_only = laver_incompatibility(laver_tree(EVENS, (3,)), laver_tree(affine(2, 1), (3,)), 2, 6, 50)
        assert stem_only.ok and stem_only.violations == ()

    def test_audit(self):
        T = laver_tree(W)
        plan = ThinPlan(EVENS, modular(5), (0, 1, 2, 3))
        assert audit_omega_thin(T, laver_thin(T, plan), plan, 6, 64).ok
        assert not audit_omega_thin(T, T, plan, 3, 64).ok

    def test_antichain(self):
        res = omega_antichain(EVENS, laver_tree(W), 8, 5, None, 2 * EVENS.mu(64))
        assert len(res.certificates) == 28 and res.ok


class TestMiller:
    def test_only_branching_nodes_change(self):
        T = miller_tree(W, period=4, offset=3)
        S = miller_thin(T, ThinPlan(EVENS, ZERO, (0, 1)), 10)
        assert [S.children((0,) * k, 50) for k in range(3)] == [(0,), (0,), (0,)]
        assert S.children((0, 0, 0), 50) == (2, 3, 4, 5)
        assert S.children((0, 0, 0, 4), 50) == (0,)

    def test_laver_tree_same_as_laver_thin(self):
        plan = ThinPlan(EVENS, modular(1), (0, 1, 2))
        a, b = laver_thin(laver_tree(W), plan), miller_thin(laver_tree(W), plan, 10)
        assert a == b
        assert truncate(a, 3, 20) == truncate(b, 3, 20)

    def test_no_branching_within_depth(self):
        with pytest.raises(TreeError):
            miller_thin(miller_tree(W, 10, 9), ThinPlan(EVENS, ZERO, (0,)), 5)

    def test_antichain(self):
        res = omega_antichain(EVENS, miller_tree(W, 2), 8, 5, None, 2 * EVENS.mu(64), kind="miller")
        assert res.ok
        assert not miller_incompatibility(res.members[0][0], res.members[0][0], 8, 16, 64).ok


class TestSilver:
    def test_tree_view(self):
        assert split_levels(silver_to_tree(silver(EVENS), 3), 3) == [0, 2]
        assert len(silver_to_tree(silver(None, {0: 1}), 4)) == 5
        assert silver_to_tree(silver(W), 2) == FiniteTree.full_binary(2)

    @given(st.integers(1, 4), st.integers(0, 3), st.integers(1, 12))
    def test_ramification_levels_are_free_positions(self, a, b, N):
        p = silver(affine(a, b), {0: 1, 5: 1})
        assert split_levels(silver_lazy(p), N) == p.free_positions(0, N)

    def test_thin(self):
        q = silver_thin(silver(W), ThinPlan(EVENS, ZERO, (0, 1, 2)))
        assert q.free_positions(0, 16) == [0, 1, 2, 3, 4, 5, 8, 9]
        assert q(6) == 0
        assert audit_silver_thin(silver(W), q, ThinPlan(EVENS, ZERO, (0, 1, 2)), 16).ok

    def test_thin_total_condition(self):
        with pytest.raises(SilverError):
            silver_thin(silver(None), ThinPlan(EVENS, ZERO, (0,)))

    def test_pair(self):
        base = silver(EVENS)
        plans = [ThinPlan(EVENS, h, (0, 1, 2, 3)) for h in ev_diff_family(3)]
        q1, q2 = (silver_thin(base, p) for p in plans[1:])
        assert silver_incompatibility(q1, q2, 8, 16).ok
        assert silver_antichain(EVENS, base, 8, 5, None).ok
