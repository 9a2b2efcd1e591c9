"""Sliding-window block counting."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccdi.blocks import (
    AlphabetSpec,
    SeriesError,
    SymbolSeries,
    count_blocks,
    marginalize,
    resolve_inputs,
    to_pmf,
)

X = [0, 1, 0, 1]
Y = [0, 0, 1, 1]
Z = [0, 0, 0, 0]
HAND = AlphabetSpec(2, 2, 1)


def series(draw_len=st.integers(3, 60), m=3):
    return draw_len.flatmap(lambda n: st.lists(st.integers(0, m - 1), min_size=n, max_size=n))


class TestTypes:
    def test_alphabet_needs_two_symbols(self):
        with pytest.raises(SeriesError):
            AlphabetSpec(1, 2)
        with pytest.raises(SeriesError):
            AlphabetSpec(2, 2, 0)

    def test_out_of_range_symbol_named(self):
        with pytest.raises(SeriesError, match="index 2"):
            SymbolSeries(np.array([0, 1, 5]), 2)

    def test_empty_series(self):
        with pytest.raises(SeriesError):
            SymbolSeries(np.array([], dtype=int), 2)

    def test_length_mismatch(self):
        with pytest.raises(SeriesError, match="lengths differ"):
            resolve_inputs([0, 1, 0], [0, 1], None)


class TestCountBlocks:
    def test_hand_example(self):
        c = count_blocks(X, Y, Z, k=1, alphabet=HAND)
        assert c.n == 3
        assert c.counts.sum() == 3
        for cell in [(0, 1, 0, 0, 0, 0), (1, 0, 0, 1, 0, 0), (0, 1, 1, 1, 0, 0)]:
            assert c.counts[cell] == 1

    def test_k0_is_contingency_table(self):
        rng = np.random.default_rng(0)
        x, y = rng.integers(0, 2, 50), rng.integers(0, 3, 50)
        c = count_blocks(x, y, k=0, alphabet=AlphabetSpec(2, 3))
        expected = np.zeros((2, 3), dtype=int)
        np.add.at(expected, (x, y), 1)
        assert c.n == 50
        np.testing.assert_array_equal(c.counts[:, :, 0], expected)

    def test_constant_series(self):
        c = count_blocks(np.zeros(10, int), np.zeros(10, int), np.zeros(10, int), k=2, alphabet=AlphabetSpec(2, 2, 2))
        assert c.counts[(0,) * 9] == 8
        assert c.counts.sum() == 8

    def test_too_short(self):
        with pytest.raises(SeriesError):
            count_blocks([0, 1], [0, 1], k=2)

    def test_cell_budget(self):
        with pytest.raises(SeriesError, match="budget"):
            count_blocks([0, 1, 0], [0, 1, 0], k=1, alphabet=HAND, cell_budget=8)

    def test_boundary_exclusion_drops_k_per_boundary(self):
        rng = np.random.default_rng(3)
        x, y = rng.integers(0, 2, 100), rng.integers(0, 2, 100)
        full = count_blocks(x, y, k=2, alphabet=HAND)
        cut = count_blocks(x, y, k=2, alphabet=HAND, boundaries=[30, 60])
        assert full.n - cut.n == 4

    @given(series(), st.integers(0, 2))
    def test_counts_sum_to_windows(self, xs, k):
        if len(xs) <= k:
            return
        c = count_blocks(xs, xs[::-1], k=k, alphabet=AlphabetSpec(3, 3))
        assert c.counts.sum() == c.n == len(xs) - k

    @given(series(st.integers(4, 40), 2), st.integers(0, 2**32 - 1))
    def test_relabeling_preserves_count_multiset(self, xs, seed):
        # permuting the symbols (hence the cell index mapping) only permutes counts
        rng = np.random.default_rng(seed)
        ys = rng.integers(0, 2, len(xs))
        perm = rng.permutation(2)
        a = count_blocks(xs, ys, k=1, alphabet=HAND)
        b = count_blocks(perm[np.asarray(xs)], ys, k=1, alphabet=HAND)
        assert sorted(a.counts.ravel()) == sorted(b.counts.ravel())


class TestPmf:
    def test_hand_example_masses(self):
        p = to_pmf(count_blocks(X, Y, Z, k=1, alphabet=HAND))
        assert np.count_nonzero(p.probs) == 3
        np.testing.assert_allclose(p.probs[p.probs > 0], 1 / 3)

    def test_scale_invariance(self):
        once = to_pmf(count_blocks(X * 5, Y * 5, k=0, alphabet=HAND))
        twice = to_pmf(count_blocks(X * 10, Y * 10, k=0, alphabet=HAND))
        np.testing.assert_array_equal(once.probs, twice.probs)

    def test_marginalize_all_axes(self):
        c = count_blocks(X, Y, Z, k=1, alphabet=HAND)
        np.testing.assert_array_equal(marginalize(c, range(6)).probs, to_pmf(c).probs)

    def test_marginalize_hand_example(self):
        c = count_blocks(X, Y, Z, k=1, alphabet=HAND)
        m = marginalize(c, [2, 4, 5]).probs  # y0, z0, z1
        assert m[0, 0, 0] == pytest.approx(2 / 3)
        assert m[1, 0, 0] == pytest.approx(1 / 3)

    @given(series(st.integers(5, 40), 2), st.integers(0, 2**32 - 1))
    def test_marginalize_commutes_with_normalizing(self, xs, seed):
        rng = np.random.default_rng(seed)
        c = count_blocks(xs, rng.integers(0, 2, len(xs)), rng.integers(0, 2, len(xs)), k=1,
                         alphabet=AlphabetSpec(2, 2, 2))
        keep = sorted(rng.choice(6, size=3, replace=False).tolist())
        drop = tuple(i for i in range(6) if i not in keep)
        np.testing.assert_allclose(marginalize(c, keep).probs, to_pmf(c).probs.sum(axis=drop), atol=1e-15)
