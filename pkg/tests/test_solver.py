"""Solver tests: weighted-l1 coordinate descent against closed forms and the
reference proximal-gradient solver."""

import numpy as np
import pytest

from mixedgm import (
    PenalizedProblem,
    SolverError,
    ValidationError,
    default_rho_grid,
    fit_path,
    fit_weighted_l1,
    kkt_residual,
    loss_gradient,
    loss_value,
    objective_value,
    penalty_value,
    reference_prox,
    rho_max,
)


def random_problem(seed, n=50, d=12, loss="squared", weights=None, groups=None):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    beta = np.zeros(d)
    beta[: d // 3] = rng.uniform(-2.0, 2.0, d // 3)
    eta = X @ beta + 0.3 * rng.standard_normal(n)
    if loss == "squared":
        y = eta
    else:
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    if weights is None:
        weights = rng.choice([0.5, 1.0, 2.0], size=d)
    return PenalizedProblem(X=X, y=y, loss=loss, weights=weights, groups=groups)


def test_rho_zero_recovers_ols():
    prob = random_problem(0, n=80, d=6)
    fit = fit_weighted_l1(prob, rho=0.0)
    Xa = np.column_stack([np.ones(prob.n), prob.X])
    ols, *_ = np.linalg.lstsq(Xa, prob.y, rcond=None)
    assert fit.converged
    assert fit.intercept == pytest.approx(ols[0], abs=1e-8)
    np.testing.assert_allclose(fit.coefs, ols[1:], atol=1e-8)


def test_orthonormal_design_soft_thresholds():
    rng = np.random.default_rng(1)
    n, d = 64, 8
    Q, _ = np.linalg.qr(rng.standard_normal((n, d)))
    X = Q * np.sqrt(n)  # X'X/n = I
    y = rng.standard_normal(n)
    w = rng.choice([0.5, 1.0, 2.0], size=d)
    prob = PenalizedProblem(X=X, y=y, loss="squared", weights=w, fit_intercept=False)
    rho = 0.05
    fit = fit_weighted_l1(prob, rho=rho)
    u = X.T @ y / n
    expected = np.sign(u) * np.maximum(np.abs(u) - rho * w, 0.0)
    np.testing.assert_allclose(fit.coefs, expected, atol=1e-9)


@pytest.mark.parametrize("loss", ["squared", "logistic"])
def test_matches_reference_prox(loss):
    for seed in range(3):
        prob = random_problem(10 + seed, loss=loss, d=10)
        rho = 0.3 * rho_max(prob)
        fit = fit_weighted_l1(prob, rho=rho)
        ref = reference_prox(prob, rho=rho, penalty="weighted_l1")
        assert fit.converged and ref.converged
        assert fit.objective == pytest.approx(ref.objective, abs=1e-6)
        assert set(np.flatnonzero(np.abs(fit.coefs) > 1e-8)) == set(
            np.flatnonzero(np.abs(ref.coefs) > 1e-8)
        )


def test_kkt_residual_small_on_converged_fits():
    for seed, loss in ((20, "squared"), (21, "logistic")):
        prob = random_problem(seed, loss=loss)
        for rho in (0.5 * rho_max(prob), 0.1 * rho_max(prob)):
            fit = fit_weighted_l1(prob, rho=rho)
            assert fit.converged
            assert kkt_residual(prob, fit.coefs, fit.intercept, rho) <= 1e-7


def test_objective_field_consistent():
    prob = random_problem(22, loss="logistic")
    rho = 0.2 * rho_max(prob)
    fit = fit_weighted_l1(prob, rho=rho)
    recomputed = objective_value(prob, fit.coefs, fit.intercept, rho)
    assert fit.objective == pytest.approx(recomputed, abs=1e-10)
    assert penalty_value(prob, fit.coefs, rho) >= 0.0


def test_path_head_is_all_zero():
    prob = random_problem(23)
    top = rho_max(prob)
    fit = fit_weighted_l1(prob, rho=top * 1.0001)
    assert np.all(fit.coefs == 0.0)
    fits = fit_path(prob, [2.0 * top, top * 1.0001])
    assert all(np.all(f.coefs == 0.0) for f in fits)


def test_path_loss_monotone_and_warm_start():
    for seed, loss in ((24, "squared"), (25, "logistic")):
        prob = random_problem(seed, loss=loss)
        grid = default_rho_grid(prob, num=12)
        fits = fit_path(prob, grid)
        losses = [loss_value(prob, f.coefs, f.intercept) for f in fits]
        assert all(l1 <= l0 + 1e-10 for l0, l1 in zip(losses, losses[1:]))
        # warm start does not change the stationary point
        cold = fit_weighted_l1(prob, rho=float(grid[-1]))
        assert cold.objective == pytest.approx(fits[-1].objective, abs=1e-8)


def test_default_grid_shape():
    prob = random_problem(26)
    grid = default_rho_grid(prob)
    top = rho_max(prob)
    assert grid.size == 50
    assert grid[0] == pytest.approx(top, rel=1e-12)
    assert grid[-1] == pytest.approx(0.01 * top, rel=1e-12)
    ratios = grid[1:] / grid[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)


def test_grid_validation():
    prob = random_problem(27)
    with pytest.raises(ValidationError):
        fit_path(prob, [0.1, 0.2])
    with pytest.raises(ValidationError):
        fit_path(prob, [])
    unpen = PenalizedProblem(
        X=np.eye(3), y=np.ones(3), loss="squared", weights=np.zeros(3)
    )
    with pytest.raises(SolverError):
        rho_max(unpen)


def test_logistic_gradient_matches_finite_differences():
    for seed in range(3):
        prob = random_problem(30 + seed, loss="logistic", d=8)
        rng = np.random.default_rng(40 + seed)
        coefs = rng.uniform(-1.0, 1.0, prob.d)
        b0 = float(rng.uniform(-0.5, 0.5))
        g0, g = loss_gradient(prob, coefs, b0)
        h = 1e-6
        num0 = (loss_value(prob, coefs, b0 + h) - loss_value(prob, coefs, b0 - h)) / (2 * h)
        assert g0 == pytest.approx(num0, rel=1e-6, abs=1e-9)
        for k in range(prob.d):
            step = np.zeros(prob.d)
            step[k] = h
            num = (loss_value(prob, coefs + step, b0) - loss_value(prob, coefs - step, b0)) / (2 * h)
            assert g[k] == pytest.approx(num, rel=1e-6, abs=1e-9)


def test_overlap_toy_support_agreement():
    # groups (b1,b2) and (b2,b3); the shared coordinate gets weight 2
    groups = [(0, 1), (1, 2)]
    w = np.array([1.0, 2.0, 1.0])
    rng = np.random.default_rng(50)
    for _ in range(3):
        X = rng.standard_normal((40, 3))
        y = X @ np.array([1.5, 0.0, 0.0]) + 0.2 * rng.standard_normal(40)
        prob = PenalizedProblem(X=X, y=y, loss="squared", weights=w, groups=groups)
        rho = 0.25 * rho_max(prob)
        sur = fit_weighted_l1(prob, rho=rho)
        grp = reference_prox(prob, rho=rho, penalty="overlap_group_l2")
        s_sur = set(np.flatnonzero(np.abs(sur.coefs) > 1e-6))
        s_grp = set(np.flatnonzero(np.abs(grp.coefs) > 1e-6))
        assert s_sur == s_grp


def test_overlap_large_rho_zeroes_groups():
    prob = random_problem(51, groups=[(0, 1, 2), (2, 3)], d=4)
    fit = reference_prox(prob, rho=100.0, penalty="overlap_group_l2")
    np.testing.assert_array_equal(fit.coefs, np.zeros(4))


def test_weighted_l1_ball_inside_group_ball():
    # sum of group l2 norms is bounded by the weighted l1 norm with overlap
    # counts as weights, so the weighted ball sits inside the group ball
    groups = [(0, 1), (1, 2)]
    w = np.array([1.0, 2.0, 1.0])
    rng = np.random.default_rng(52)
    radius = 1.7
    for _ in range(200):
        b = rng.standard_normal(3)
        b *= radius / (w @ np.abs(b))
        group_pen = np.linalg.norm(b[[0, 1]]) + np.linalg.norm(b[[1, 2]])
        assert group_pen <= radius + 1e-12


def test_determinism():
    prob = random_problem(53, loss="logistic")
    rho = 0.2 * rho_max(prob)
    a = fit_weighted_l1(prob, rho=rho)
    b = fit_weighted_l1(prob, rho=rho)
    assert np.array_equal(a.coefs, b.coefs)
    assert a.intercept == b.intercept and a.iterations == b.iterations


def test_separable_logistic_reports_nonconvergence():
    x = np.linspace(-1.0, 1.0, 30)
    y = (x > 0).astype(float)
    prob = PenalizedProblem(
        X=x[:, None], y=y, loss="logistic", weights=np.ones(1)
    )
    fit = fit_weighted_l1(prob, rho=0.0, max_sweeps=300)
    assert not fit.converged
    assert np.all(np.isfinite(fit.coefs)) and np.isfinite(fit.intercept)


def test_fit_result_serializes():
    prob = random_problem(54)
    fit = fit_weighted_l1(prob, rho=0.1)
    obj = fit.to_json()
    assert set(obj) == {"coefs", "intercept", "rho", "converged", "iterations", "objective"}
