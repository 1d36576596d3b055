"""Shared fixtures.

The solver kernels are JIT-compiled on first use; several tests assert wall
clock budgets, so compilation is triggered once up front instead of inside
whichever timed test happens to run first.
"""

import numpy as np
import pytest

from mixedgm import PenalizedProblem, fit_weighted_l1, reference_prox


@pytest.fixture(scope="session", autouse=True)
def warm_solver():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 5))
    y_lin = rng.standard_normal(20)
    y_bin = (rng.random(20) < 0.5).astype(float)
    w = np.ones(5)
    groups = [(0, 1), (1, 2)]
    for loss, y in (("squared", y_lin), ("logistic", y_bin)):
        prob = PenalizedProblem(X=X, y=y, loss=loss, weights=w, groups=groups)
        fit_weighted_l1(prob, rho=0.1)
        reference_prox(prob, rho=0.1, penalty="weighted_l1")
        reference_prox(prob, rho=0.1, penalty="overlap_group_l2")
    yield
