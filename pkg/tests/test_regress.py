from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_quantile_intercept, pinball_objective, ridge_oracle
from tixbench import LinearModel, enforce_noncrossing, pinball_fit, predict, ridge_fit


def random_instance(rng, n=20, d=4):
    X = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    return X, y


class TestRidge:
    def test_exact_interpolation(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 4))
        w_true = np.array([1.0, -2.0, 0.5, 3.0])
        y = X @ w_true + 0.7
        model = ridge_fit(X, y, lam=0.0)
        np.testing.assert_allclose(predict(model, X), y, atol=1e-9)

    def test_infinite_shrinkage_limit(self):
        rng = np.random.default_rng(2)
        X, y = random_instance(rng)
        model = ridge_fit(X, y, lam=1e12)
        assert np.all(np.abs(model.weights) < 1e-6)
        assert model.intercept == pytest.approx(y.mean(), rel=1e-6)

    def test_matches_independent_solve(self):
        rng = np.random.default_rng(3)
        X, y = random_instance(rng, n=20, d=4)
        model = ridge_fit(X, y, lam=0.1)
        w, b = ridge_oracle(X, y, 0.1)
        np.testing.assert_allclose(model.weights, w, rtol=1e-8, atol=1e-10)
        assert model.intercept == pytest.approx(b, rel=1e-8)

    def test_column_rescaling_invariance(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            X, y = random_instance(rng, n=40, d=5)
            base = predict(ridge_fit(X, y, lam=0.3), X)
            X2 = X.copy()
            X2[:, 2] = 13.5 * X2[:, 2] - 4.0
            scaled = predict(ridge_fit(X2, y, lam=0.3), X2)
            np.testing.assert_allclose(base, scaled, atol=1e-6)

    def test_local_optimality(self):
        rng = np.random.default_rng(5)
        X, y = random_instance(rng, n=50, d=4)
        lam = 0.2
        model = ridge_fit(X, y, lam=lam)
        mx, sx = X.mean(0), np.maximum(X.std(0), 1e-8)

        def objective(w, b):
            r = y - (X @ w + b)
            ws = w * sx
            return r @ r + lam * (ws @ ws)

        best = objective(model.weights, model.intercept)
        for _ in range(1000):
            dw = rng.normal(scale=1e-3, size=4)
            db = rng.normal(scale=1e-3)
            assert objective(model.weights + dw, model.intercept + db) >= best - 1e-12

    def test_errors(self):
        with pytest.raises(ValueError, match="empty context"):
            ridge_fit(np.empty((0, 3)), np.empty(0), lam=0.1)
        with pytest.raises(ValueError, match="non-finite"):
            ridge_fit(np.array([[np.nan, 1.0]]), np.array([1.0]), lam=0.1)
        with pytest.raises(ValueError):
            ridge_fit(np.ones((3, 2)), np.ones(3), lam=-1.0)

    def test_rank_deficient_unpenalized_system(self):
        # Duplicated and constant columns with lam=0: the least-squares
        # fallback still reproduces a consistent target exactly.
        rng = np.random.default_rng(20)
        X = rng.normal(size=(30, 3))
        X = np.column_stack([X, X[:, 0], np.ones(30)])
        y = 2.0 * X[:, 1] - X[:, 2] + 0.3
        model = ridge_fit(X, y, lam=0.0)
        np.testing.assert_allclose(predict(model, X), y, atol=1e-9)


class TestPinball:
    def test_median_intercept(self):
        rng = np.random.default_rng(6)
        y = rng.normal(size=101)
        X = np.ones((101, 1))
        model = pinball_fit(X, y, alpha=0.5, lam=0.0)
        fitted = predict(model, X)[0]
        assert fitted == pytest.approx(np.median(y), abs=1e-4)

    def test_upper_quantile_intercept(self):
        y = np.arange(1.0, 101.0)
        X = np.ones((100, 1))
        model = pinball_fit(X, y, alpha=0.9, lam=0.0)
        fitted = predict(model, X)[0]
        best, step = grid_quantile_intercept(y, 0.9)
        assert abs(fitted - 90.0) <= 1.0
        assert abs(fitted - best) <= 1.0 + step

    def test_exact_linear_target(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(60, 3))
        y = X @ np.array([2.0, -1.0, 0.5]) + 4.0
        for alpha in (0.2, 0.5, 0.8):
            model = pinball_fit(X, y, alpha=alpha, lam=0.0)
            np.testing.assert_allclose(predict(model, X), y, atol=1e-4)

    def test_objective_near_lad_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(3):
            x = rng.normal(size=25)
            y = 2.0 * x + rng.normal(size=25)
            X = x[:, None]
            model = pinball_fit(X, y, alpha=0.5, lam=0.0)
            achieved = pinball_objective(predict(model, X), y, 0.5)
            # Exhaustive grid over (slope, intercept) pairs.
            slopes = np.linspace(-5, 5, 121)
            intercepts = np.linspace(y.min() - 1, y.max() + 1, 121)
            best = min(
                pinball_objective(s * x + b, y, 0.5) for s in slopes for b in intercepts
            )
            assert achieved <= 1.01 * best + 1e-9

    def test_alpha_validation(self):
        X = np.ones((5, 1))
        y = np.arange(5.0)
        for alpha in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError):
                pinball_fit(X, y, alpha=alpha)


class TestPredict:
    def test_constant_model(self):
        model = LinearModel(weights=np.zeros(3), intercept=2.5, lam=0.0)
        out = predict(model, np.random.default_rng(0).normal(size=(7, 3)))
        np.testing.assert_array_equal(out, np.full(7, 2.5))

    def test_identity_echo(self):
        model = LinearModel(weights=np.array([1.0]), intercept=0.0, lam=0.0)
        x = np.linspace(-3, 3, 11)[:, None]
        np.testing.assert_array_equal(predict(model, x), x[:, 0])

    def test_deterministic_reapplication(self):
        rng = np.random.default_rng(9)
        X, y = random_instance(rng)
        model = ridge_fit(X, y, lam=0.05)
        a = predict(model, X)
        b = predict(model, X)
        assert np.array_equal(a, b)

    def test_dimension_mismatch(self):
        model = LinearModel(weights=np.zeros(3), intercept=0.0, lam=0.0)
        with pytest.raises(ValueError, match="dimension mismatch"):
            predict(model, np.ones((4, 2)))

    @given(a=st.floats(-3, 3), b=st.floats(-3, 3))
    @settings(max_examples=25)
    def test_linearity(self, a, b):
        rng = np.random.default_rng(10)
        model = LinearModel(weights=rng.normal(size=3), intercept=1.5, lam=0.0)
        X1 = rng.normal(size=(6, 3))
        X2 = rng.normal(size=(6, 3))
        lhs = predict(model, a * X1 + b * X2)
        rhs = a * predict(model, X1) + b * predict(model, X2) + (1 - a - b) * model.intercept
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


class TestNoncrossing:
    def test_single_alpha_identity(self):
        v = np.array([3.0, 1.0, 2.0])
        out = enforce_noncrossing({0.5: v})
        assert np.array_equal(out[0.5], v)

    def test_sorts_crossed_values(self):
        out = enforce_noncrossing(
            {0.1: np.array([2.0]), 0.5: np.array([1.0]), 0.9: np.array([3.0])}
        )
        assert [out[a][0] for a in (0.1, 0.5, 0.9)] == [1.0, 2.0, 3.0]

    def test_monotone_input_unchanged(self):
        preds = {0.1: np.array([1.0, 5.0]), 0.9: np.array([2.0, 5.0])}
        out = enforce_noncrossing(preds)
        assert np.array_equal(out[0.1], preds[0.1])
        assert np.array_equal(out[0.9], preds[0.9])

    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3))
    @settings(max_examples=50)
    def test_output_monotone(self, vals):
        out = enforce_noncrossing({a: np.array([v]) for a, v in zip((0.25, 0.5, 0.75), vals)})
        assert out[0.25][0] <= out[0.5][0] <= out[0.75][0]
