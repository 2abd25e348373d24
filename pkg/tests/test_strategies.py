import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellvis.strategies import (
    SizeError,
    StrategyPair,
    StrategySpace,
    best_response,
    canonicalize,
    enumerate_canonical,
    format_signs,
    pair_from_index,
    pair_index,
    parse_signs,
    strategy_column,
    top_responses,
)


@st.composite
def pairs(draw, max_len=6):
    n = draw(st.integers(1, max_len))
    m = draw(st.integers(1, max_len))
    signs = st.sampled_from([-1, 1])
    return StrategyPair(draw(st.lists(signs, min_size=n, max_size=n)),
                        draw(st.lists(signs, min_size=m, max_size=m)))


def brute_max(w):
    n, m = w.shape
    return max(np.array(a) @ w @ np.array(b)
               for a in itertools.product((1, -1), repeat=n)
               for b in itertools.product((1, -1), repeat=m))


class TestCanonicalize:
    def test_flips(self):
        p = canonicalize(StrategyPair((-1, 1), (1, 1)))
        assert p == StrategyPair((1, -1), (-1, -1))

    def test_unchanged(self):
        p = StrategyPair((1, -1), (-1, 1))
        assert canonicalize(p) == p

    @given(pairs())
    def test_idempotent_and_constant_on_orbit(self, p):
        c = canonicalize(p)
        assert c.is_canonical
        assert canonicalize(c) == c
        assert canonicalize(p.negated()) == c

    @given(pairs())
    def test_preserves_matrix(self, p):
        n, m = p.shape
        np.testing.assert_array_equal(strategy_column(canonicalize(p), n, m), strategy_column(p, n, m))

    @given(pairs())
    def test_pair_and_negation_cancel_locally(self, p):
        # mixing p with -p leaves every single-side outcome unbiased
        np.testing.assert_array_equal(np.add(p.a, p.negated().a), 0)
        np.testing.assert_array_equal(np.add(p.b, p.negated().b), 0)


class TestEnumerate:
    @pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (2, 2), (1, 5), (3, 4)])
    def test_count(self, n, m):
        assert len(list(enumerate_canonical(n, m))) == 2 ** (n + m - 1)

    def test_one_by_one(self):
        mats = sorted(p.matrix()[0, 0] for p in enumerate_canonical(1, 1))
        assert mats == [-1.0, 1.0]

    def test_two_by_two_distinct(self):
        cols = {tuple(strategy_column(p, 2, 2)) for p in enumerate_canonical(2, 2)}
        assert len(cols) == 8

    @pytest.mark.parametrize("n,m", [(n, m) for n in range(1, 6) for m in range(1, 6) if n + m <= 10])
    def test_distinct_columns_and_canonical(self, n, m):
        ps = list(enumerate_canonical(n, m))
        assert all(p.is_canonical for p in ps)
        assert len({tuple(strategy_column(p, n, m)) for p in ps}) == 2 ** (n + m - 1)

    def test_order_is_index_order(self):
        for k, p in enumerate(enumerate_canonical(3, 2)):
            assert pair_index(p) == k
            assert pair_from_index(k, 3, 2) == p

    def test_cap(self):
        with pytest.raises(SizeError, match="cap 22"):
            next(enumerate_canonical(12, 11))
        with pytest.raises(SizeError, match="cap 6"):
            next(enumerate_canonical(4, 3, cap=6))


class TestStrategyColumn:
    @pytest.mark.parametrize("a,b,expected", [
        ((1, 1), (1, -1), [[1, -1], [1, -1]]),
        ((1, -1), (1, -1), [[1, -1], [-1, 1]]),
        ((1, 1, 1), (1, 1), np.ones((3, 2))),
    ])
    def test_examples(self, a, b, expected):
        got = strategy_column(StrategyPair(a, b), len(a), len(b))
        np.testing.assert_array_equal(got, np.ravel(expected))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            strategy_column(StrategyPair((1,), (1,)), 2, 1)


class TestSignVector:
    def test_invalid_entries(self):
        with pytest.raises(ValueError):
            StrategyPair((1, 0), (1,))

    def test_length_cap(self):
        with pytest.raises(SizeError):
            StrategyPair((1,) * 31, (1,))

    @given(pairs())
    def test_string_round_trip(self, p):
        assert parse_signs(format_signs(p.a)) == p.a


class TestStrategySpace:
    @pytest.mark.parametrize("n,m", [(1, 1), (2, 3), (4, 2)])
    def test_products_match_enumeration(self, n, m):
        rng = np.random.default_rng(n * 10 + m)
        w = rng.normal(size=(n, m))
        space = StrategySpace(n, m)
        expected = [np.sum(w * p.matrix()) for p in enumerate_canonical(n, m)]
        np.testing.assert_allclose(space.products(w), expected, atol=1e-12)
        idx = np.arange(len(space))
        for k in (0, len(space) // 2, len(space) - 1):
            np.testing.assert_array_equal(space.block(idx)[:, k], strategy_column(space.pair(k), n, m))


class TestBestResponse:
    @given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_matches_brute_force(self, n, m, seed):
        w = np.random.default_rng(seed).normal(size=(n, m))
        value, pair = best_response(w, threads=1)
        assert value == pytest.approx(brute_max(w), abs=1e-12)
        assert np.sum(w * pair.matrix()) == pytest.approx(value, abs=1e-12)
        assert pair.is_canonical

    def test_zero_form_maps_to_plus(self):
        # all ties: first enumerated canonical A vector, induced side all +1
        _, pair = best_response(np.zeros((2, 3)), threads=1)
        assert pair == StrategyPair((1, -1), (1, 1, 1))

    def test_thread_count_does_not_change_result(self, monkeypatch):
        import bellvis.strategies as mod
        monkeypatch.setattr(mod, "CHUNK", 8)
        w = np.random.default_rng(3).normal(size=(9, 10))
        one = top_responses(w, 5, threads=1)
        many = top_responses(w, 5, threads=4)
        assert one == many
        assert one[0][0] == pytest.approx(brute_max(w), abs=1e-12)
