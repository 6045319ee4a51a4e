"""Tests for structural models, distortion specs and triple generation."""

import numpy as np
import pytest
from scipy.stats import ks_2samp

from cecert.examples import make_polynomial_example
from cecert.model import (
    DistortionSpec,
    EvaluationError,
    StructuralModel,
    eval_feature,
    eval_h,
    sample_pairs,
    sample_triples,
)
from cecert.sampling import RngStream, standard_normal_batch


def _streams(seed=0):
    return (RngStream(seed, 0), RngStream(seed, 1), RngStream(seed, 2))


def make_noise_free_model():
    """h ignores V entirely, so Y == Z holds sample by sample."""

    def h(x, v):
        return x[..., 0] ** 2 - x[..., 1]

    return StructuralModel(
        d=2, k=1,
        x_sampler=lambda stream, n, dist: standard_normal_batch(stream, 2 * n).reshape(n, 2),
        v_sampler=lambda stream, n: standard_normal_batch(stream, n).reshape(n, 1),
        h=h, name="noise_free",
    )


class TestDistortionSpec:
    def test_kinds_validate(self):
        DistortionSpec.none()
        DistortionSpec.gaussian_shift_scale([1.0], [2.0])
        DistortionSpec.tail_tilt(0.99)
        DistortionSpec.point_concentration([0.0, 0.0], 0.5)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            DistortionSpec(kind="bananas")

    def test_shift_scale_needs_positive_stdev(self):
        with pytest.raises(ValueError):
            DistortionSpec.gaussian_shift_scale([0.0], [0.0])

    def test_tilt_level_range(self):
        for bad in (0.0, 1.0, -0.5):
            with pytest.raises(ValueError):
                DistortionSpec.tail_tilt(bad)

    def test_concentration_needs_positive_radius(self):
        with pytest.raises(ValueError):
            DistortionSpec.point_concentration([0.0], 0.0)


class TestTripleGeneration:
    def test_shapes(self):
        model = make_polynomial_example()
        batch = sample_triples(model, DistortionSpec.none(), 100, _streams())
        assert batch.X.shape == (100, 4)
        assert batch.Y.shape == (100,)
        assert batch.Z.shape == (100,)
        assert batch.n == 100

    def test_pairs_match_triples_y(self):
        model = make_polynomial_example()
        x_s, v_s, vt_s = _streams(3)
        batch = sample_triples(model, DistortionSpec.none(), 64, (x_s, v_s, vt_s))
        X, Y = sample_pairs(model, DistortionSpec.none(), 64,
                            (RngStream(3, 0), RngStream(3, 1)))
        assert np.array_equal(batch.X, X)
        assert np.array_equal(batch.Y, Y)

    def test_y_and_z_share_marginal_law(self):
        model = make_polynomial_example()
        batch = sample_triples(model, DistortionSpec.none(), 50_000, _streams(11))
        assert ks_2samp(batch.Y, batch.Z).pvalue > 0.01

    def test_y_and_z_differ_when_noise_matters(self):
        model = make_polynomial_example()
        batch = sample_triples(model, DistortionSpec.none(), 1000, _streams())
        assert np.all(batch.Y != batch.Z)

    def test_noise_free_model_gives_bitwise_equal_copies(self):
        batch = sample_triples(make_noise_free_model(), DistortionSpec.none(),
                               1000, _streams())
        assert np.array_equal(batch.Y, batch.Z)

    def test_rejects_nonpositive_count(self):
        model = make_polynomial_example()
        with pytest.raises(ValueError):
            sample_triples(model, DistortionSpec.none(), 0, _streams())


class TestEvaluation:
    def test_eval_h_reports_offending_row(self):
        def h(x, v):
            out = x[..., 0] * 0.0
            return np.where(x[..., 0] > 10.0, np.inf, out)

        model = StructuralModel(
            d=1, k=1,
            x_sampler=lambda s, n, d: np.linspace(0.0, 20.0, n).reshape(n, 1),
            v_sampler=lambda s, n: np.zeros((n, 1)),
            h=h, name="bad",
        )
        with pytest.raises(EvaluationError, match="row"):
            sample_pairs(model, DistortionSpec.none(), 10,
                         (RngStream(0, 0), RngStream(0, 1)))

    def test_eval_h_accepts_row_wise_callable(self):
        # A scalar-only h (no trailing-axis broadcasting) goes through the
        # row-loop fallback and must agree with the vectorized form.
        def scalar_h(x, v):
            return float(x[0]) + float(v[0])

        model = StructuralModel(
            d=2, k=1,
            x_sampler=lambda s, n, d: standard_normal_batch(s, 2 * n).reshape(n, 2),
            v_sampler=lambda s, n: standard_normal_batch(s, n).reshape(n, 1),
            h=scalar_h, name="rowwise",
        )
        X = np.arange(6.0).reshape(3, 2)
        V = np.ones((3, 1))
        np.testing.assert_array_equal(eval_h(model, X, V), X[:, 0] + 1.0)

    def test_eval_feature_requires_configuration(self):
        model = make_polynomial_example()
        with pytest.raises(ValueError):
            eval_feature(model, np.zeros((3, 4)))


class TestDistortedSampling:
    def test_shift_scale_moves_x(self):
        model = make_polynomial_example()
        dist = DistortionSpec.gaussian_shift_scale(np.full(4, 2.0), np.full(4, 0.5))
        X, _ = sample_pairs(model, dist, 50_000, (RngStream(1, 0), RngStream(1, 1)))
        np.testing.assert_allclose(X.mean(axis=0), np.full(4, 2.0), atol=0.02)
        np.testing.assert_allclose(X.std(axis=0), np.full(4, 0.5), atol=0.02)

    def test_concentration_stays_inside_ball(self):
        model = make_polynomial_example()
        center = np.array([1.0, 1.0, 1.0, 1.0])
        dist = DistortionSpec.point_concentration(center, 0.25)
        X, _ = sample_pairs(model, dist, 10_000, (RngStream(2, 0), RngStream(2, 1)))
        radii = np.linalg.norm(X - center, axis=1)
        assert np.all(radii <= 0.25)
        assert radii.max() > 0.2  # actually fills the ball

    def test_concentration_is_uniform_in_volume(self):
        # For the uniform law on a d-ball, P(r <= R/2) = (1/2)^d.
        model = make_polynomial_example()
        dist = DistortionSpec.point_concentration(np.zeros(4), 1.0)
        X, _ = sample_pairs(model, dist, 100_000, (RngStream(4, 0), RngStream(4, 1)))
        radii = np.linalg.norm(X, axis=1)
        assert np.mean(radii <= 0.5) == pytest.approx(0.5**4, abs=0.005)
