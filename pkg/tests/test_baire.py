import pytest
from hypothesis import given
from hypothesis import strategies as st

from treeforge.baire import (
    EnumerationError,
    affine,
    block,
    block_counts,
    dominates_window,
    explicit,
    find_good_indices,
    from_function,
    growth_from_json,
    iterate_set,
    leq_star_upto,
    mu,
    omega,
    set_from_json,
    weakly_dominates_at,
)

EVENS = affine(2)
ODDS = affine(2, 1)
SQUARES = from_function(lambda n: n * n, "squares")
POW2 = from_function(lambda n: 2**n, "powers")


def naive_count(X, Y, lo, hi):
    ys = []
    k = 0
    while (y := Y.mu(k)) < hi:
        ys.append(y)
        k += 1
    return sum(1 for y in ys if lo <= y)


class TestMu:
    def test_examples(self):
        assert mu(EVENS, 3) == 6
        assert [mu(omega(), n) for n in range(5)] == list(range(5))
        assert mu(POW2, 4) == 16

    def test_non_monotone_rejected(self):
        bad = from_function(lambda n: [0, 3, 2, 5][n])
        with pytest.raises(EnumerationError, match="index 2"):
            bad.mu(3)

    def test_explicit_prefix(self):
        X = explicit([1, 4, 9])
        assert X.mu(2) == 9
        with pytest.raises(EnumerationError):
            X.mu(3)
        with pytest.raises(EnumerationError):
            explicit([1, 1])

    def test_json(self):
        assert set_from_json({"affine": {"a": 3, "b": 1}}).prefix(3) == [1, 4, 7]
        assert set_from_json({"affine": {"a": 3}}) == affine(3)
        assert set_from_json(EVENS.to_json()) == EVENS
        for bad in [{"affine": {"a": 0}}, {"weird": 1}, [1, 2], {"explicit": 3}]:
            with pytest.raises(EnumerationError):
                set_from_json(bad)

    def test_membership(self):
        assert EVENS.contains(10) and not EVENS.contains(11)
        assert SQUARES.members_in(10, 40) == [16, 25, 36]


class TestBlocks:
    def test_examples(self):
        assert block(EVENS, 2, 1) == (10, 12)
        assert block(affine(3), 1, 0) == (6, 9)
        for i in range(4):
            for j in range(2**i):
                assert block(omega(), i, j) == (2**i + j, 2**i + j + 1)

    def test_sub_block_range(self):
        with pytest.raises(EnumerationError):
            block(EVENS, 2, 4)

    @given(st.integers(1, 6), st.integers(0, 5), st.integers(0, 6))
    def test_blocks_tile(self, a, b, i):
        X = affine(a, b)
        bounds = [block(X, i, j) for j in range(2**i)]
        assert bounds[0][0] == X.mu(2**i) and bounds[-1][1] == X.mu(2 ** (i + 1))
        for (lo, hi), (lo2, _) in zip(bounds, bounds[1:]):
            assert lo < hi == lo2


class TestDomination:
    def test_dominates_examples(self):
        assert all(dominates_window(affine(4), omega(), n) for n in range(20))
        assert not any(dominates_window(EVENS, EVENS, n) for n in range(20))
        assert dominates_window(SQUARES, EVENS, 3)

    def test_weakly_examples(self):
        assert weakly_dominates_at(affine(5), omega(), 2)
        assert not any(weakly_dominates_at(EVENS, ODDS, i) for i in range(6))
        assert weakly_dominates_at(affine(3), omega(), 3)
        assert block_counts(affine(3), omega(), 1) == [3, 3]

    def test_good_indices(self):
        assert find_good_indices(affine(4), omega(), 3) == [0, 1, 2, 3]
        assert find_good_indices(EVENS, ODDS, 5) == []
        # X thickens from 2^3 on, so only later blocks see two odds per gap
        X = from_function(lambda n: 2 * n if n < 8 else 16 + 4 * (n - 8), "mixed")
        expected = [i for i in range(5) if all(naive_count(X, ODDS, *block(X, i, j)) >= 2 for j in range(2**i))]
        assert find_good_indices(X, ODDS, 4) == expected == [3, 4]

    @given(st.integers(1, 6), st.integers(0, 4), st.integers(1, 4), st.integers(0, 3), st.integers(0, 6))
    def test_weakly_against_oracle(self, a, b, c, d, i):
        X, Y = affine(a, b), affine(c, d)
        naive = all(naive_count(X, Y, *block(X, i, j)) >= 2 for j in range(2**i))
        assert weakly_dominates_at(X, Y, i) == naive

    @given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 20))
    def test_windows_imply_blocks(self, a, c, n0):
        X, Y = affine(a), affine(c)
        N = n0 + 40
        if all(dominates_window(X, Y, n) for n in range(n0, N + 1)):
            for i in range(8):
                if n0 <= 2**i and 2 ** (i + 1) <= N:
                    assert weakly_dominates_at(X, Y, i)


class TestGrowth:
    def test_iterate_examples(self):
        assert iterate_set(lambda k: k + 2, 0).prefix(4) == [2, 4, 6, 8]
        assert iterate_set(lambda k: 2 * k, 1).prefix(4) == [2, 4, 8, 16]
        assert iterate_set(lambda k: k * k + 1, 1).prefix(3) == [2, 5, 26]

    def test_non_progressive(self):
        with pytest.raises(EnumerationError):
            iterate_set(lambda k: k, 3).mu(0)

    @given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 10))
    def test_orbit_recurrence(self, a, b, n):
        f = growth_from_json({"affine": {"a": a, "b": b}})
        X = iterate_set(f, n)
        for k in range(6):
            assert X.mu(k + 1) == f(X.mu(k))

    def test_leq_star(self):
        assert leq_star_upto(lambda n: n, lambda n: n + 1, 100).threshold == 0
        v = leq_star_upto(lambda n: 2 * n, lambda n: n + 10, 100)
        assert not v.holds and 11 in v.counterexamples
        same = leq_star_upto(lambda n: n * n, lambda n: n * n, 50)
        assert same.holds and same.threshold == 0

    def test_leq_star_late_agreement(self):
        v = leq_star_upto(lambda n: 10, lambda n: n, 30)
        assert v.holds and v.threshold == 10
