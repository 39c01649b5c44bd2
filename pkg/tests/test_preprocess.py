import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dpsynth.errors import ConfigurationError, DimensionError
from dpsynth.preprocess import (
    ClipParam,
    DEGENERATE_STD_TOL,
    clip_l2,
    one_hot,
    zscore_apply,
    zscore_fit,
)


def welford_stats(features):
    """Independent streaming oracle: one-pass mean/population-std."""
    n, d = features.shape
    mean = np.zeros(d)
    m2 = np.zeros(d)
    for i, row in enumerate(features, start=1):
        delta = row - mean
        mean += delta / i
        m2 += delta * (row - mean)
    return mean, np.sqrt(m2 / n)


class TestZscoreFit:
    def test_constant_column_is_degenerate(self):
        stats = zscore_fit(np.zeros((3, 1)))
        assert stats.means[0] == 0.0
        assert stats.stds[0] == 0.0
        assert stats.degenerate_mask[0]

    def test_hand_arithmetic(self):
        stats = zscore_fit(np.array([[1.0], [2.0], [3.0]]))
        assert stats.means[0] == pytest.approx(2.0)
        assert stats.stds[0] == pytest.approx(math.sqrt(2.0 / 3.0), rel=1e-15)

    def test_matches_streaming_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.normal(3.0, 2.5, size=(1000, 8))
        stats = zscore_fit(x)
        mean_ref, std_ref = welford_stats(x)
        np.testing.assert_allclose(stats.means, mean_ref, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(stats.stds, std_ref, rtol=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            zscore_fit(np.array([[1.0], [np.nan]]))


class TestZscoreApply:
    def test_self_normalization(self):
        x = np.array([[1.0], [2.0], [3.0]])
        z = zscore_apply(x, zscore_fit(x))
        assert abs(z.mean()) <= 1e-12
        assert z.std() == pytest.approx(1.0, abs=1e-12)

    def test_constant_column_maps_to_zero(self):
        x = np.full((5, 2), 7.0)
        z = zscore_apply(x, zscore_fit(x))
        assert (z == 0.0).all()

    def test_train_stats_on_disjoint_matrix(self):
        rng = np.random.default_rng(11)
        train = rng.normal(size=(400, 5))
        other = rng.normal(size=(100, 5))
        stats = zscore_fit(train)
        mean_ref, std_ref = welford_stats(train)
        expected = (other - mean_ref) / std_ref
        np.testing.assert_allclose(zscore_apply(other, stats), expected, rtol=1e-12)

    def test_dimension_mismatch(self):
        stats = zscore_fit(np.ones((3, 2)) * np.arange(3)[:, None])
        with pytest.raises(DimensionError):
            zscore_apply(np.ones((3, 4)), stats)

    def test_roundtrip_invariant(self):
        rng = np.random.default_rng(3)
        x = rng.normal(5.0, 3.0, size=(256, 6))
        x[:, 2] = 1.5  # degenerate column
        z = zscore_apply(x, zscore_fit(x))
        nondeg = [0, 1, 3, 4, 5]
        assert np.abs(z[:, nondeg].mean(axis=0)).max() <= 1e-9
        np.testing.assert_allclose(z[:, nondeg].std(axis=0), 1.0, atol=1e-9)
        assert (z[:, 2] == 0.0).all()


class TestClip:
    def test_below_bound_unchanged(self):
        x = np.array([[0.3, 0.4]])  # norm 0.5
        out = clip_l2(x, ClipParam(1.0))
        assert (out == x).all()

    def test_three_four_five(self):
        out = clip_l2(np.array([[3.0, 4.0]]), ClipParam(1.0))
        np.testing.assert_allclose(out, [[0.6, 0.8]], rtol=1e-15)

    def test_random_rows_norm_and_direction(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(500, 12)) * 3.0
        out = clip_l2(x, ClipParam(2.0))
        norms = np.linalg.norm(out, axis=1)
        assert norms.max() <= 2.0 * (1 + 1e-12)
        cos = (out * x).sum(axis=1) / (
            np.linalg.norm(out, axis=1) * np.linalg.norm(x, axis=1)
        )
        np.testing.assert_allclose(cos, 1.0, atol=1e-12)

    def test_never_increases_norms(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(64, 4))
        out = clip_l2(x, ClipParam(0.5))
        assert (
            np.linalg.norm(out, axis=1) <= np.linalg.norm(x, axis=1) + 1e-15
        ).all()

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(
            np.float64,
            (8, 3),
            elements=st.floats(-1e6, 1e6, allow_nan=False, width=64),
        ),
        st.floats(0.01, 100.0),
    )
    def test_idempotent_exactly(self, x, c):
        clipped = clip_l2(x, ClipParam(c))
        again = clip_l2(clipped, ClipParam(c))
        assert (clipped == again).all()

    def test_bad_c_rejected(self):
        with pytest.raises(ConfigurationError):
            ClipParam(0.0)


class TestOneHot:
    def test_first_and_last_basis_vectors(self):
        y = one_hot(np.array([1, 3]), 3)
        np.testing.assert_array_equal(y, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])

    def test_rows_sum_exactly_one(self):
        y = one_hot(np.arange(1, 11), 10)
        assert (y.sum(axis=1) == 1.0).all()

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(1, 7), min_size=1, max_size=64))
    def test_argmax_roundtrip(self, labels):
        labels = np.array(labels)
        y = one_hot(labels, 7)
        np.testing.assert_array_equal(np.argmax(y, axis=1) + 1, labels)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            one_hot(np.array([0]), 3)
        with pytest.raises(ValueError):
            one_hot(np.array([4]), 3)
