"""Information functionals on dense joint tables."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ccdi.info import (
    ConsistencyError,
    JointPmf,
    PmfError,
    SupportError,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    mutual_information,
    relative_entropy,
)


def random_pmf(rng, shape, sparsity=0.0):
    p = rng.random(shape)
    if sparsity:
        p[rng.random(shape) < sparsity] = 0.0
        p.flat[0] += 1e-3
    return p / p.sum()


tables = st.tuples(
    st.lists(st.integers(1, 3), min_size=3, max_size=4),
    st.integers(0, 2**32 - 1),
    st.sampled_from([0.0, 0.3, 0.7]),
).map(lambda a: random_pmf(np.random.default_rng(a[1]), tuple(a[0]), a[2]))


class TestJointPmf:
    def test_rejects_negative(self):
        with pytest.raises(PmfError):
            JointPmf(np.array([1.2, -0.2]))

    def test_rejects_bad_total(self):
        with pytest.raises(PmfError):
            JointPmf(np.array([0.5, 0.5 + 1e-9]))

    def test_accepts_rounding_within_tolerance(self):
        JointPmf(np.array([0.5, 0.5 + 5e-13]))

    def test_read_only(self):
        p = JointPmf(np.array([0.25, 0.75]))
        with pytest.raises(ValueError):
            p.probs[0] = 1.0

    def test_from_counts(self):
        p = JointPmf.from_counts([[1, 3], [0, 4]])
        assert p.axes == (2, 2)
        np.testing.assert_allclose(p.probs, [[0.125, 0.375], [0.0, 0.5]])

    def test_from_zero_counts(self):
        with pytest.raises(PmfError):
            JointPmf.from_counts([0, 0])


class TestEntropy:
    def test_fair_coin(self):
        assert entropy([0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_point_mass(self):
        assert entropy([0.0, 1.0, 0.0]) == 0.0

    def test_two_term_sum(self):
        assert entropy([0.3, 0.7]) == pytest.approx(0.610864, abs=1e-6)

    @given(tables)
    def test_bounds(self, p):
        h = entropy(p)
        assert -1e-15 <= h <= math.log(p.size) + 1e-12

    def test_uniform_attains_bound(self):
        assert entropy(np.full((3, 4), 1 / 12)) == pytest.approx(math.log(12), abs=1e-13)


class TestConditionalEntropy:
    def test_independent_coins(self):
        assert conditional_entropy(np.full((2, 2), 0.25), [0], [1]) == pytest.approx(math.log(2))

    def test_copy(self):
        assert conditional_entropy(np.diag([0.5, 0.5]), [0], [1]) == 0.0

    def test_symmetric_channel(self):
        p = np.array([[0.4, 0.1], [0.1, 0.4]])
        assert conditional_entropy(p, [0], [1]) == pytest.approx(0.500402, abs=1e-6)

    @given(tables)
    def test_chain_rule(self, p):
        joint = entropy(p)
        marg = entropy(p.sum(axis=tuple(range(1, p.ndim))))
        rest = conditional_entropy(p, tuple(range(1, p.ndim)), (0,))
        assert joint == pytest.approx(marg + rest, abs=1e-10)

    def test_overlapping_axes(self):
        with pytest.raises(PmfError):
            conditional_entropy(np.full((2, 2), 0.25), [0], [0])


class TestConditionalMutualInformation:
    def test_independent(self):
        assert mutual_information(np.full((2, 2), 0.25), [0], [1]) == 0.0

    def test_copy_channel(self):
        assert mutual_information(np.diag([0.5, 0.5]), [0], [1]) == pytest.approx(math.log(2))

    def test_xor_needs_conditioning(self):
        # axes (x, y, w) with y = x xor w, all fair
        p = np.zeros((2, 2, 2))
        for x in range(2):
            for w in range(2):
                p[x, x ^ w, w] = 0.25
        assert conditional_mutual_information(p, [0], [1], [2]) == pytest.approx(math.log(2), abs=1e-14)
        assert mutual_information(p, [0], [1]) == 0.0

    @given(tables)
    def test_matches_conditional_entropy_identity(self, p):
        a, b, c = (0,), (1,), tuple(range(2, p.ndim))
        direct = conditional_mutual_information(p, a, b, c)
        via_h = conditional_entropy(p, a, c) + conditional_entropy(p, b, c) - conditional_entropy(p, a + b, c)
        assert direct == pytest.approx(via_h, abs=1e-10)

    @given(tables)
    def test_symmetric(self, p):
        c = tuple(range(2, p.ndim))
        assert conditional_mutual_information(p, [0], [1], c) == pytest.approx(
            conditional_mutual_information(p, [1], [0], c), abs=1e-14)

    def test_nonnegative_before_clipping(self):
        rng = np.random.default_rng(11)
        from ccdi.info import _marginal_entropy, as_pmf

        worst = 0.0
        for _ in range(1000):
            shape = tuple(rng.integers(1, 4, size=rng.integers(3, 5)))
            p = as_pmf(random_pmf(rng, shape, sparsity=rng.choice([0.0, 0.5])))
            a, b, c = (0,), (1,), tuple(range(2, len(shape)))
            raw = (_marginal_entropy(p, a + c) + _marginal_entropy(p, b + c)
                   - _marginal_entropy(p, a + b + c) - _marginal_entropy(p, c))
            worst = min(worst, raw)
        assert worst >= -1e-12

    def test_consistency_error_below_tolerance(self, monkeypatch):
        import ccdi.info as info

        calls = iter([0.0, 0.0, 1e-9, 0.0])
        monkeypatch.setattr(info, "_marginal_entropy", lambda p, axes: next(calls))
        with pytest.raises(ConsistencyError):
            info.conditional_mutual_information(np.full((2, 2), 0.25), [0], [1])

    def test_rounding_noise_clipped(self, monkeypatch):
        import ccdi.info as info

        calls = iter([0.0, 0.0, 5e-13, 0.0])
        monkeypatch.setattr(info, "_marginal_entropy", lambda p, axes: next(calls))
        assert info.conditional_mutual_information(np.full((2, 2), 0.25), [0], [1]) == 0.0

    def test_empty_a_rejected(self):
        with pytest.raises(PmfError):
            conditional_mutual_information(np.full((2, 2), 0.25), [], [1])


class TestRelativeEntropy:
    def test_identity(self):
        assert relative_entropy([0.2, 0.8], [0.2, 0.8]) == 0.0

    def test_point_mass_vs_uniform(self):
        assert relative_entropy([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))

    def test_two_term_sum(self):
        assert relative_entropy([0.75, 0.25], [0.5, 0.5]) == pytest.approx(0.130812, abs=1e-6)

    def test_support_mismatch(self):
        with pytest.raises(SupportError, match=r"\(1,\)"):
            relative_entropy([0.5, 0.5], [1.0, 0.0])

    @settings(max_examples=50)
    @given(arrays(float, 4, elements=st.floats(0.01, 1.0)), arrays(float, 4, elements=st.floats(0.01, 1.0)))
    def test_zero_iff_equal(self, p, q):
        p, q = p / p.sum(), q / q.sum()
        d = relative_entropy(p, q)
        assert d >= 0
        if np.max(np.abs(p - q)) >= 1e-6:
            assert d > 0
