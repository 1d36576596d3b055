"""Weighted-l1 penalized regression: production coordinate descent plus a
slow proximal-gradient reference solver used as a correctness oracle.

The production path minimizes

    loss(beta0, beta) + rho * sum_d w_d |beta_d| ,

where the loss is the mean squared error with the 1/(2n) convention,

    squared:  (1/(2n)) sum_i (y_i - beta0 - x_i' beta)^2 ,
    logistic: (1/n) sum_i [log(1 + exp(eta_i)) - y_i eta_i] ,

with eta_i = beta0 + x_i' beta. Under these conventions an orthonormal
design (X'X/n = I) has the closed-form solution
soft(X'y/n, rho * w) coordinate by coordinate.

The intercept is always unpenalized; penalty weights apply to the raw
parameterization. Columns are standardized internally for optimization
(weights folded by the column scales) and results are mapped back, so the
returned coefficients solve the problem exactly as stated.

A fit is reported converged only when every coordinate satisfies the
soft-threshold KKT condition within ``kkt_tol`` on the raw scale.

The reference solver is FISTA with backtracking. It supports the same
weighted-l1 penalty and, for desk-scale problems, the direct overlapping
group penalty rho * sum_g ||beta_g||_2, whose proximal operator is
evaluated with Dykstra's algorithm since overlapping groups admit no
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import expit

from .errors import DimensionError, SolverError, ValidationError

__all__ = [
    "PenalizedProblem",
    "FitResult",
    "loss_value",
    "loss_gradient",
    "penalty_value",
    "objective_value",
    "kkt_residual",
    "rho_max",
    "default_rho_grid",
    "fit_weighted_l1",
    "fit_path",
    "reference_prox",
]

_LOSSES = ("squared", "logistic")
_PENALTIES = ("weighted_l1", "overlap_group_l2")


@dataclass(frozen=True, eq=False)
class PenalizedProblem:
    """One penalized regression.

    X: (n, d) design matrix, without an intercept column.
    y: length-n response; binary 0/1 for the logistic loss.
    loss: "squared" or "logistic".
    weights: length-d nonnegative penalty weights; 0 leaves a column
        unpenalized. The intercept is separate and always unpenalized.
    groups: optional coordinate groups for the reference solver's
        overlapping group penalty.
    fit_intercept: include an unpenalized intercept (default True).
    """

    X: np.ndarray
    y: np.ndarray
    loss: str
    weights: np.ndarray
    groups: tuple[tuple[int, ...], ...] | None = None
    fit_intercept: bool = True

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        w = np.array(self.weights, dtype=float)
        if X.ndim != 2:
            raise DimensionError("X must be 2d")
        n, d = X.shape
        if y.shape != (n,):
            raise DimensionError("y length must match the rows of X")
        if w.shape != (d,):
            raise DimensionError("weights length must match the columns of X")
        if np.any(w < 0):
            raise ValidationError("penalty weights must be nonnegative")
        if self.loss not in _LOSSES:
            raise ValidationError(f"unknown loss {self.loss!r}")
        if self.loss == "logistic" and y.size and not np.isin(y, (0.0, 1.0)).all():
            raise ValidationError("logistic responses must be 0/1")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValidationError("X and y must be finite")
        if self.groups is not None:
            groups = tuple(tuple(int(i) for i in g) for g in self.groups)
            for g in groups:
                if any(not 0 <= i < d for i in g) or len(g) == 0:
                    raise DimensionError("group indices must address columns of X")
            object.__setattr__(self, "groups", groups)
        for name, arr in (("X", X), ("y", y), ("weights", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class FitResult:
    """Solution of one fit at one penalty level."""

    coefs: np.ndarray
    intercept: float
    rho: float
    converged: bool
    iterations: int
    objective: float

    def __post_init__(self):
        c = np.array(self.coefs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coefs", c)

    def to_json(self) -> dict:
        return {
            "coefs": self.coefs.tolist(),
            "intercept": self.intercept,
            "rho": self.rho,
            "converged": self.converged,
            "iterations": self.iterations,
            "objective": self.objective,
        }


# ---------------------------------------------------------------------------
# losses

def _linear_predictor(problem, coefs, intercept):
    return intercept + problem.X @ coefs


def loss_value(problem: PenalizedProblem, coefs, intercept: float = 0.0) -> float:
    eta = _linear_predictor(problem, np.asarray(coefs, dtype=float), intercept)
    n = problem.n
    if problem.loss == "squared":
        r = problem.y - eta
        return float(r @ r) / (2.0 * n)
    # log(1 + exp(eta)) - y * eta, computed stably
    return float(np.sum(np.logaddexp(0.0, eta) - problem.y * eta)) / n


def loss_gradient(problem: PenalizedProblem, coefs, intercept: float = 0.0):
    """Gradient of the loss: (d/d intercept, d/d coefs)."""
    eta = _linear_predictor(problem, np.asarray(coefs, dtype=float), intercept)
    n = problem.n
    if problem.loss == "squared":
        r = eta - problem.y
    else:
        r = expit(eta) - problem.y
    return float(r.sum()) / n, (problem.X.T @ r) / n


def penalty_value(problem: PenalizedProblem, coefs, rho: float,
                  penalty: str = "weighted_l1") -> float:
    coefs = np.asarray(coefs, dtype=float)
    if penalty == "weighted_l1":
        return rho * float(problem.weights @ np.abs(coefs))
    if penalty == "overlap_group_l2":
        if problem.groups is None:
            raise ValidationError("overlap penalty needs problem.groups")
        return rho * float(sum(np.linalg.norm(coefs[list(g)]) for g in problem.groups))
    raise ValidationError(f"unknown penalty {penalty!r}")


def objective_value(problem: PenalizedProblem, coefs, intercept: float, rho: float,
                    penalty: str = "weighted_l1") -> float:
    return loss_value(problem, coefs, intercept) + penalty_value(problem, coefs, rho, penalty)


def kkt_residual(problem: PenalizedProblem, coefs, intercept: float, rho: float) -> float:
    """Largest violation of the soft-threshold stationarity conditions,
    measured on the raw parameterization."""
    coefs = np.asarray(coefs, dtype=float)
    g0, g = loss_gradient(problem, coefs, intercept)
    res = abs(g0) if problem.fit_intercept else 0.0
    thr = rho * problem.weights
    at_zero = coefs == 0.0
    res_zero = np.maximum(np.abs(g[at_zero]) - thr[at_zero], 0.0)
    res_active = np.abs(g[~at_zero] + thr[~at_zero] * np.sign(coefs[~at_zero]))
    for block in (res_zero, res_active):
        if block.size:
            res = max(res, float(block.max()))
    return res


# ---------------------------------------------------------------------------
# production coordinate descent

@njit(cache=True, nogil=True)
def _cd_kernel(XT, wobs, resid, beta, beta0, pen, colsq, tol, max_sweeps,
               fit_intercept):  # pragma: no cover - exercised via fit_weighted_l1
    d, n = XT.shape
    wmean = 0.0
    for i in range(n):
        wmean += wobs[i]
    wmean /= n
    sweeps = 0
    converged = False
    full = True
    while sweeps < max_sweeps:
        maxdelta = 0.0
        if fit_intercept and wmean > 0.0:
            acc = 0.0
            for i in range(n):
                acc += wobs[i] * resid[i]
            upd = acc / (n * wmean)
            if upd != 0.0:
                beta0 += upd
                for i in range(n):
                    resid[i] -= upd
            if abs(upd) > maxdelta:
                maxdelta = abs(upd)
        for dd in range(d):
            if colsq[dd] <= 0.0:
                continue
            if not full and beta[dd] == 0.0:
                continue
            acc = 0.0
            for i in range(n):
                acc += wobs[i] * XT[dd, i] * resid[i]
            g = acc / n + colsq[dd] * beta[dd]
            if g > pen[dd]:
                bnew = (g - pen[dd]) / colsq[dd]
            elif g < -pen[dd]:
                bnew = (g + pen[dd]) / colsq[dd]
            else:
                bnew = 0.0
            diff = bnew - beta[dd]
            if diff != 0.0:
                for i in range(n):
                    resid[i] -= diff * XT[dd, i]
                beta[dd] = bnew
            if abs(diff) > maxdelta:
                maxdelta = abs(diff)
        sweeps += 1
        if maxdelta < tol:
            if full:
                converged = True
                break
            full = True
        else:
            full = False
    return beta0, sweeps, converged


class _Standardized:
    """Internal standardized view of a problem: x_tilde = (x - m) / s with
    the penalty weights folded so the optimum matches the raw problem."""

    def __init__(self, problem: PenalizedProblem):
        X = problem.X
        n, d = X.shape
        if problem.fit_intercept:
            self.m = X.mean(axis=0)
        else:
            self.m = np.zeros(d)
        xc = X - self.m
        s = np.sqrt(np.mean(xc * xc, axis=0))
        self.dead = s == 0.0
        self.s = np.where(self.dead, 1.0, s)
        self.XT = np.ascontiguousarray(((X - self.m) / self.s).T)
        self.colsq_base = np.where(self.dead, 0.0, 1.0) * np.mean(
            (self.XT * self.XT), axis=1
        )

    def fold_weights(self, weights, rho):
        return rho * weights / self.s

    def to_std(self, coefs, intercept):
        beta = coefs * self.s
        beta0 = intercept + float(coefs @ self.m)
        return beta, beta0

    def to_raw(self, beta, beta0):
        coefs = beta / self.s
        coefs[self.dead] = 0.0
        intercept = beta0 - float(coefs @ self.m)
        return coefs, intercept


def _fit_squared(problem, std, rho, beta, beta0, tol, kkt_tol, max_sweeps):
    pen = std.fold_weights(problem.weights, rho)
    wobs = np.ones(problem.n)
    total = 0
    tol_k = tol
    kkt = np.inf
    for _ in range(8):
        resid = problem.y - beta0 - beta @ std.XT
        beta0, used, _ = _cd_kernel(
            std.XT, wobs, resid, beta, beta0, pen, std.colsq_base,
            tol_k, max_sweeps - total, problem.fit_intercept,
        )
        total += used
        coefs, intercept = std.to_raw(beta.copy(), beta0)
        kkt = kkt_residual(problem, coefs, intercept, rho)
        if kkt <= kkt_tol or total >= max_sweeps:
            break
        tol_k = max(tol_k / 10.0, 1e-16)
    return coefs, intercept, total, kkt <= kkt_tol


def _fit_logistic(problem, std, rho, beta, beta0, tol, kkt_tol, max_sweeps):
    pen = std.fold_weights(problem.weights, rho)
    y = problem.y
    total = 0
    ok = False
    coefs, intercept = std.to_raw(beta.copy(), beta0)
    for _ in range(200):
        eta = beta0 + beta @ std.XT
        mu = expit(eta)
        wobs = np.maximum(mu * (1.0 - mu), 1e-5)
        resid = (y - mu) / wobs
        colsq = np.where(std.dead, 0.0, (std.XT * std.XT) @ wobs / problem.n)
        prev = beta.copy()
        prev0 = beta0
        beta0, used, _ = _cd_kernel(
            std.XT, wobs, resid, beta, beta0, pen, colsq,
            tol, max_sweeps - total, problem.fit_intercept,
        )
        total += used
        coefs, intercept = std.to_raw(beta.copy(), beta0)
        kkt = kkt_residual(problem, coefs, intercept, rho)
        step = max(float(np.max(np.abs(beta - prev), initial=0.0)), abs(beta0 - prev0))
        if kkt <= kkt_tol:
            ok = True
            break
        if total >= max_sweeps:
            break
        if step < tol / 10.0:
            # surrogate fixed point reached but KKT still off: tighten
            tol = max(tol / 10.0, 1e-16)
    return coefs, intercept, total, ok


def fit_weighted_l1(
    problem: PenalizedProblem,
    rho: float,
    init=None,
    tol: float = 1e-7,
    kkt_tol: float = 1e-7,
    max_sweeps: int = 10_000,
) -> FitResult:
    """Solve one weighted-l1 problem by cyclic coordinate descent.

    The logistic loss runs a proximal-Newton outer loop (IRLS weights and
    working response) around the same weighted inner solver. ``init`` warm
    starts from raw-scale coefficients. Non-convergence within the sweep
    budget is reported through ``converged=False``, never silently.
    """
    if rho < 0:
        raise ValidationError("rho must be nonnegative")
    std = _Standardized(problem)
    if init is None:
        beta = np.zeros(problem.d)
        if not problem.fit_intercept:
            beta0 = 0.0
        elif problem.loss == "squared":
            beta0 = float(problem.y.mean())
        else:
            ybar = min(max(float(problem.y.mean()), 1e-10), 1.0 - 1e-10)
            beta0 = float(np.log(ybar / (1.0 - ybar)))
    else:
        coefs = np.array(init, dtype=float)
        if coefs.shape != (problem.d,):
            raise DimensionError("init must have one value per column")
        beta, beta0 = std.to_std(coefs, 0.0)
        if not problem.fit_intercept:
            beta0 = 0.0
    beta[std.dead] = 0.0

    if problem.loss == "squared":
        coefs, intercept, iters, ok = _fit_squared(
            problem, std, rho, beta, beta0, tol, kkt_tol, max_sweeps
        )
    else:
        coefs, intercept, iters, ok = _fit_logistic(
            problem, std, rho, beta, beta0, tol, kkt_tol, max_sweeps
        )
    return FitResult(
        coefs=coefs,
        intercept=intercept if problem.fit_intercept else 0.0,
        rho=float(rho),
        converged=bool(ok),
        iterations=int(iters),
        objective=objective_value(problem, coefs, intercept, rho),
    )


def rho_max(problem: PenalizedProblem) -> float:
    """Smallest rho at which every penalized coefficient is zero, computed
    from the loss gradient at the intercept-only fit."""
    if problem.fit_intercept:
        if problem.loss == "squared":
            b0 = float(problem.y.mean())
        else:
            ybar = min(max(float(problem.y.mean()), 1e-10), 1.0 - 1e-10)
            b0 = float(np.log(ybar / (1.0 - ybar)))
    else:
        b0 = 0.0
    _, g = loss_gradient(problem, np.zeros(problem.d), b0)
    pen = problem.weights > 0
    if not np.any(pen):
        raise SolverError("no penalized coordinates; rho_max is undefined")
    return float(np.max(np.abs(g[pen]) / problem.weights[pen]))


def default_rho_grid(problem: PenalizedProblem, num: int = 50,
                     min_ratio: float = 0.01) -> np.ndarray:
    """Log-spaced descending grid from rho_max down to min_ratio * rho_max."""
    top = rho_max(problem)
    if top <= 0:
        raise SolverError("rho_max is zero; the response carries no signal")
    return np.geomspace(top, min_ratio * top, num)


def fit_path(problem: PenalizedProblem, rho_grid, **kwargs) -> list[FitResult]:
    """Fit along a strictly descending grid, warm-starting each point from
    the previous solution."""
    grid = np.asarray(rho_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("rho_grid must be a nonempty 1d sequence")
    if grid.size > 1 and not np.all(np.diff(grid) < 0):
        raise ValidationError("rho_grid must be strictly descending")
    results = []
    init = None
    for rho in grid:
        res = fit_weighted_l1(problem, float(rho), init=init, **kwargs)
        results.append(res)
        init = res.coefs
    return results


# ---------------------------------------------------------------------------
# reference proximal-gradient solver

def _group_soft(u: np.ndarray, t: float) -> np.ndarray:
    nrm = float(np.linalg.norm(u))
    if nrm <= t:
        return np.zeros_like(u)
    return (1.0 - t / nrm) * u


def _dykstra_prox(v: np.ndarray, groups, t: float, tol: float = 1e-13,
                  max_cycles: int = 5000) -> np.ndarray:
    """prox of t * sum_g ||x_g||_2 at v via Dykstra's splitting.

    Coordinates outside every group pass through unchanged. With disjoint
    groups this terminates after one cycle (the exact group-wise prox)."""
    x = v.copy()
    idx = [np.fromiter(g, dtype=np.int64) for g in groups]
    corr = [np.zeros(len(g)) for g in groups]
    for _ in range(max_cycles):
        change = 0.0
        for gi, g in enumerate(idx):
            u = x[g] + corr[gi]
            new = _group_soft(u, t)
            corr[gi] = u - new
            change = max(change, float(np.max(np.abs(x[g] - new), initial=0.0)))
            x[g] = new
        if change < tol:
            break
    return x


def reference_prox(
    problem: PenalizedProblem,
    rho: float,
    penalty: str = "weighted_l1",
    tol: float = 1e-8,
    max_iter: int = 100_000,
) -> FitResult:
    """Desk-scale FISTA reference solver (d capped at 500).

    ``penalty="weighted_l1"`` mirrors the production objective and serves
    as an independent second route to the same optimum.
    ``penalty="overlap_group_l2"`` minimizes the direct overlapping group
    objective loss + rho * sum_g ||beta_g||_2 using Dykstra's algorithm for
    the proximal step. Stops when the objective decrease stays below
    ``tol``.
    """
    if problem.d > 500:
        raise ValidationError("reference solver is capped at d <= 500")
    if penalty not in _PENALTIES:
        raise ValidationError(f"unknown penalty {penalty!r}")
    if penalty == "overlap_group_l2" and problem.groups is None:
        raise ValidationError("overlap penalty needs problem.groups")

    d = problem.d
    X1 = problem.X
    # Lipschitz bound of the loss gradient; logistic curvature is at most 1/4
    cols = np.hstack([X1, np.ones((problem.n, 1))]) if problem.fit_intercept else X1
    lip = float(np.linalg.norm(cols, 2)) ** 2 / problem.n
    if problem.loss == "logistic":
        lip *= 0.25
    t = 1.0 / max(lip, 1e-12)

    def prox(vec, step):
        out = vec.copy()
        if penalty == "weighted_l1":
            thr = step * rho * problem.weights
            out[:d] = np.sign(vec[:d]) * np.maximum(np.abs(vec[:d]) - thr, 0.0)
        else:
            out[:d] = _dykstra_prox(vec[:d].copy(), problem.groups, step * rho)
        return out

    def full_obj(vec):
        return objective_value(problem, vec[:d], vec[d] if problem.fit_intercept else 0.0,
                               rho, penalty)

    def smooth_grad(vec):
        g0, g = loss_gradient(problem, vec[:d], vec[d] if problem.fit_intercept else 0.0)
        if problem.fit_intercept:
            return np.concatenate([g, [g0]])
        return g

    def smooth_val(vec):
        return loss_value(problem, vec[:d], vec[d] if problem.fit_intercept else 0.0)

    size = d + 1 if problem.fit_intercept else d
    x = np.zeros(size)
    z = x.copy()
    momentum = 1.0
    best = x.copy()
    best_obj = full_obj(x)
    prev_obj = best_obj
    flat = 0
    iters = 0
    converged = False
    restarts = 0
    for iters in range(1, max_iter + 1):
        g = smooth_grad(z)
        fz = smooth_val(z)
        while True:
            x_new = prox(z - t * g, t)
            delta = x_new - z
            quad = fz + float(g @ delta) + float(delta @ delta) / (2.0 * t)
            if smooth_val(x_new) <= quad + 1e-15:
                break
            t *= 0.5
            if t < 1e-18:
                raise SolverError("backtracking failed; the loss may be ill-posed")
        obj = full_obj(x_new)
        if obj > prev_obj:
            # adaptive restart keeps the sequence effectively monotone.
            # With an exact prox a restart is always followed by a descent
            # step, so a second restart in a row means the (possibly inexact,
            # for Dykstra) prox cannot improve on x: numerical floor reached.
            restarts += 1
            if restarts >= 2:
                converged = True
                break
            z = x.copy()
            momentum = 1.0
            prev_obj = full_obj(x)
            continue
        restarts = 0
        momentum_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
        z = x_new + ((momentum - 1.0) / momentum_new) * (x_new - x)
        momentum = momentum_new
        x = x_new
        if obj < best_obj:
            best_obj = obj
            best = x.copy()
        if abs(prev_obj - obj) < tol:
            flat += 1
            if flat >= 3:
                converged = True
                break
        else:
            flat = 0
        prev_obj = obj

    coefs = best[:d]
    intercept = float(best[d]) if problem.fit_intercept else 0.0
    return FitResult(
        coefs=coefs,
        intercept=intercept,
        rho=float(rho),
        converged=converged,
        iterations=iters,
        objective=objective_value(problem, coefs, intercept, rho, penalty),
    )
