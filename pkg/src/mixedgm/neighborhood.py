"""Node-wise neighborhood regressions for the mixed graphical model.

Each discrete node j is regressed on (Z_{-j}, Y, pairwise products Y_g Y_m)
with a logistic loss; each continuous node gamma is regressed on
(Z, Y_{-gamma}, products Y_m Z_j) with a squared loss.  The linear fit
estimates tilde parameters (originals divided by the conditional precision
K^{gg}); the precision is recovered from the residual variance as
Khat = 1 / MSE and the originals are tilde * Khat.

Three penalty variants are supported:

* ``weighted``  - every column penalized by the number of edge groups it
  belongs to (products get weight 2, main effects weight 1),
* ``regular``   - plain lasso, all weights 1,
* ``simple``    - product columns dropped, all weights 1.

Continuous columns may be standardized before fitting; the fitted
coefficients are mapped back to the raw scale with the exact affine
transform, so edge supports and scores always refer to raw parameters.
Coordinates estimated by several regressions (lambda_jk twice, each
interaction Phi_j^{gm} three times) are aggregated by keeping the value of
largest absolute magnitude.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .data import MixedDataset
from .errors import (
    DegenerateColumnError,
    DegenerateFitError,
    DimensionError,
    MixedGMError,
    SolverError,
    ValidationError,
)
from .model import (
    CGParams,
    MarkovGraph,
    MixedDims,
    graph_to_dot,
    params_from_json,
    params_to_json,
)
from .solver import PenalizedProblem, fit_path, fit_weighted_l1, rho_max

__all__ = [
    "Feature",
    "NodeRegressionSpec",
    "TildeParams",
    "GraphEstimate",
    "build_logistic",
    "build_linear",
    "build_categorical",
    "extract_tilde",
    "recover_scale",
    "fit_all",
    "estimate_from_json",
    "categorical_edges",
    "coord_edges",
]

VARIANTS = ("weighted", "regular", "simple")


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}, expected one of {VARIANTS}")


def _edge(a, b):
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Feature:
    """One design column of a node regression.

    ``coord`` names the model parameter the column estimates, ``sign`` maps
    the fitted coefficient to that parameter (stored value = sign * coef;
    the linear design folds the minus signs of the conditional-mean rewrite
    into the sign).  ``edges`` lists the edge groups of the joint penalty
    that contain the column; its length is the weighted-variant penalty
    weight.  Edge endpoints use the node order (discrete 0..q-1, then
    continuous q..q+p-1).
    """

    name: str
    coord: tuple
    weight: float
    sign: float
    edges: tuple[tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class NodeRegressionSpec:
    """Metadata for one node regression: response, variant and columns."""

    kind: str  # "logistic" or "linear"
    index: int  # discrete index j or continuous index gamma
    variant: str
    dims: MixedDims
    features: tuple[Feature, ...]
    level: int | None = None  # target level for one-vs-baseline fits

    def group_indices(self):
        """Column-index groups of the within-regression overlap penalty.

        Groups are keyed by edge, ordered by first appearance, and cover
        every column; a column with several edges appears in each.  Passing
        these as ``PenalizedProblem.groups`` makes the reference overlap
        group penalty available on the same design.
        """
        by_edge: dict[tuple[int, int], list[int]] = {}
        for i, f in enumerate(self.features):
            for e in f.edges:
                by_edge.setdefault(e, []).append(i)
        return tuple(tuple(cols) for cols in by_edge.values())


def _response_check(column, what):
    if column.min() == column.max():
        raise DegenerateColumnError(f"{what} takes a single value; cannot regress on it")


def build_logistic(data: MixedDataset, j: int, variant: str = "weighted"):
    """Design for the logistic regression of binary node j.

    Columns, in order: Z_k for k != j, Y_g for all g, then products
    Y_g Y_m for g < m (omitted by the simple variant).  The log-odds of
    Z_j = 1 are linear in these columns with coefficients
    (lambda_jk, eta_j^g, -Phi_j^{gm}); the product sign is -1 accordingly.
    Returns ``(spec, problem)``.
    """
    _check_variant(variant)
    dims = data.schema.dims()
    q, p = dims.q, dims.p
    if not 0 <= j < q:
        raise DimensionError(f"discrete index {j} out of range for q={q}")
    if dims.levels[j] != 2:
        raise ValidationError(
            f"node {j} has {dims.levels[j]} levels; use build_categorical"
        )
    zj = data.z[:, j].astype(np.float64)
    _response_check(zj, f"response column z{j}")

    cols = []
    features = []
    for k in range(q):
        if k == j:
            continue
        cols.append(data.z[:, k].astype(np.float64))
        features.append(
            Feature(
                name=f"z{k}",
                coord=("lambdaPair",) + _edge(j, k),
                weight=1.0,
                sign=1.0,
                edges=(_edge(j, k),),
            )
        )
    for g in range(p):
        cols.append(data.y[:, g])
        features.append(
            Feature(
                name=f"y{g}",
                coord=("eta", j, g),
                weight=1.0,
                sign=1.0,
                edges=(_edge(j, q + g),),
            )
        )
    if variant != "simple":
        w = 2.0 if variant == "weighted" else 1.0
        for g in range(p):
            for m in range(g + 1, p):
                cols.append(data.y[:, g] * data.y[:, m])
                features.append(
                    Feature(
                        name=f"y{g}*y{m}",
                        coord=("phi", j, g, m),
                        weight=w,
                        sign=-1.0,
                        edges=(_edge(j, q + g), _edge(j, q + m)),
                    )
                )
    X = np.column_stack(cols) if cols else np.empty((data.n, 0))
    spec = NodeRegressionSpec("logistic", j, variant, dims, tuple(features))
    problem = PenalizedProblem(
        X,
        zj,
        loss="logistic",
        weights=np.array([f.weight for f in features]),
        groups=spec.group_indices() or None,
        fit_intercept=True,
    )
    return spec, problem


def build_linear(data: MixedDataset, gamma: int, variant: str = "weighted"):
    """Design for the linear regression of continuous node gamma.

    Columns, in order: Z_j for all j, Y_m for m != gamma, then products
    Y_m Z_j (outer loop m != gamma ascending, inner loop j ascending;
    omitted by the simple variant).  Coefficients estimate the tilde
    parameters (originals over K^{gg}); the conditional-mean rewrite
    carries minus signs on the Y_m and product columns, folded into the
    feature signs, so stored values follow the model's sign convention.
    Returns ``(spec, problem)``.
    """
    _check_variant(variant)
    dims = data.schema.dims()
    q, p = dims.q, dims.p
    if not 0 <= gamma < p:
        raise DimensionError(f"continuous index {gamma} out of range for p={p}")
    bad = [j for j in range(q) if dims.levels[j] != 2]
    if bad:
        raise ValidationError(
            f"nodes {bad} are not binary; use build_categorical"
        )

    cols = []
    features = []
    for j in range(q):
        cols.append(data.z[:, j].astype(np.float64))
        features.append(
            Feature(
                name=f"z{j}",
                coord=("eta", j, gamma),
                weight=1.0,
                sign=1.0,
                edges=(_edge(j, q + gamma),),
            )
        )
    for m in range(p):
        if m == gamma:
            continue
        cols.append(data.y[:, m])
        features.append(
            Feature(
                name=f"y{m}",
                coord=("phi0",) + _edge(gamma, m),
                weight=1.0,
                sign=-1.0,
                edges=(_edge(q + gamma, q + m),),
            )
        )
    if variant != "simple":
        w = 2.0 if variant == "weighted" else 1.0
        for m in range(p):
            if m == gamma:
                continue
            for j in range(q):
                cols.append(data.y[:, m] * data.z[:, j])
                features.append(
                    Feature(
                        name=f"y{m}*z{j}",
                        coord=("phi", j) + _edge(gamma, m),
                        weight=w,
                        sign=-1.0,
                        edges=(_edge(j, q + gamma), _edge(q + gamma, q + m)),
                    )
                )
    X = np.column_stack(cols) if cols else np.empty((data.n, 0))
    spec = NodeRegressionSpec("linear", gamma, variant, dims, tuple(features))
    problem = PenalizedProblem(
        X,
        data.y[:, gamma],
        loss="squared",
        weights=np.array([f.weight for f in features]),
        groups=spec.group_indices() or None,
        fit_intercept=True,
    )
    return spec, problem


@dataclass(frozen=True, eq=False)
class TildeParams:
    """Tilde-scale estimates from one linear node regression.

    Entries are the original parameters divided by K^{gg}; the residual
    variance estimates 1 / K^{gg}.  ``phi0_row[gamma]`` and
    ``phi_rows[:, gamma]`` are structurally zero.
    """

    gamma: int
    intercept: float
    eta: np.ndarray  # (q,)
    phi0_row: np.ndarray  # (p,)
    phi_rows: np.ndarray  # (q, p)
    residual_variance: float

    def __post_init__(self):
        if not self.residual_variance > 0.0:
            raise DegenerateFitError(
                f"node y{self.gamma}: residual variance "
                f"{self.residual_variance} is not positive; "
                "cannot recover the conditional precision"
            )


def extract_tilde(spec: NodeRegressionSpec, problem: PenalizedProblem, fit) -> TildeParams:
    """Read a linear fit into tilde parameters plus the residual variance.

    The residual variance is the mean squared residual with denominator n;
    an exactly interpolating fit has no information about K^{gg} and
    raises ``DegenerateFitError``.
    """
    if spec.kind != "linear":
        raise ValidationError("extract_tilde applies to linear node regressions")
    q, p = spec.dims.q, spec.dims.p
    r = problem.y - fit.intercept - problem.X @ fit.coefs
    mse = float(r @ r) / problem.n
    eta = np.zeros(q)
    phi0_row = np.zeros(p)
    phi_rows = np.zeros((q, p))
    for f, c in zip(spec.features, fit.coefs):
        v = f.sign * c
        kind = f.coord[0]
        if kind == "eta":
            eta[f.coord[1]] = v
        elif kind == "phi0":
            a, b = f.coord[1], f.coord[2]
            phi0_row[b if a == spec.index else a] = v
        else:  # phi
            j, a, b = f.coord[1], f.coord[2], f.coord[3]
            phi_rows[j, b if a == spec.index else a] = v
    return TildeParams(
        gamma=spec.index,
        intercept=fit.intercept,
        eta=eta,
        phi0_row=phi0_row,
        phi_rows=phi_rows,
        residual_variance=mse,
    )


def recover_scale(tilde: TildeParams) -> dict:
    """Undo the tilde scaling: Khat = 1 / residual variance, originals =
    tilde * Khat.  Returns the recovered row of the joint parameters with
    ``phi0_row[gamma]`` set to Khat itself (the diagonal of Phi_0)."""
    khat = 1.0 / tilde.residual_variance
    phi0_row = tilde.phi0_row * khat
    phi0_row[tilde.gamma] = khat
    return {
        "gamma": tilde.gamma,
        "khat": khat,
        "eta0": tilde.intercept * khat,
        "eta": tilde.eta * khat,
        "phi0_row": phi0_row,
        "phi_rows": tilde.phi_rows * khat,
    }


# -- raw-scale back-maps for fits on standardized continuous columns --------
#
# With Y_std = (Y - m) / s, matching the joint densities term by term gives
#   Phi_raw^{gm}  = Phi_std^{gm} / (s_g s_m)
#   eta_raw^g     = eta_std^g / s_g + sum_m Phi_raw^{gm} m_m
#   lam_raw       = lam_std - eta_raw . m + 1/2 m' Phi_raw m
# applied per regression to exactly the coordinates it estimates.


def _destd_logistic(intercept, eta_row, phi_mat, m, s):
    phi_raw = phi_mat / np.outer(s, s)
    eta_raw = eta_row / s + phi_raw @ m
    lam = intercept - float(eta_raw @ m) + 0.5 * float(m @ phi_raw @ m)
    return lam, eta_raw, phi_raw


def _destd_linear(rec, m, s):
    g = rec["gamma"]
    phi0_raw = rec["phi0_row"] / (s * s[g])
    phi_raw = rec["phi_rows"] / (s[None, :] * s[g])
    eta_raw = rec["eta"] / s[g] + phi_raw @ m
    eta0_raw = rec["eta0"] / s[g] + float(phi0_raw @ m)
    return {
        "gamma": g,
        "eta0": eta0_raw,
        "eta": eta_raw,
        "phi0_row": phi0_raw,
        "phi_rows": phi_raw,
    }

# -- per-node coefficient extraction -----------------------------------------


def _logistic_index_arrays(spec):
    """Column/parameter index arrays for fast per-rho extraction."""
    pair_cols, pair_k = [], []
    eta_cols, eta_g = [], []
    phi_cols, phi_g, phi_m = [], [], []
    j = spec.index
    for i, f in enumerate(spec.features):
        kind = f.coord[0]
        if kind == "lambdaPair":
            pair_cols.append(i)
            a, b = f.coord[1], f.coord[2]
            pair_k.append(b if a == j else a)
        elif kind == "eta":
            eta_cols.append(i)
            eta_g.append(f.coord[2])
        else:
            phi_cols.append(i)
            phi_g.append(f.coord[2])
            phi_m.append(f.coord[3])
    ints = lambda xs: np.asarray(xs, dtype=np.intp)
    return (
        (ints(pair_cols), ints(pair_k)),
        (ints(eta_cols), ints(eta_g)),
        (ints(phi_cols), ints(phi_g), ints(phi_m)),
    )


def _logistic_pieces(spec, idx, fit, m, s):
    """Raw-scale (lam_j, lam_row, eta_row, phi_mat) for one logistic fit."""
    q, p = spec.dims.q, spec.dims.p
    (pc, pk), (ec, eg), (fc, fg, fm) = idx
    lam_row = np.zeros(q)
    lam_row[pk] = fit.coefs[pc]
    eta_row = np.zeros(p)
    eta_row[eg] = fit.coefs[ec]
    phi_mat = np.zeros((p, p))
    phi_mat[fg, fm] = -fit.coefs[fc]
    phi_mat[fm, fg] = -fit.coefs[fc]
    lam_j, eta_raw, phi_raw = _destd_logistic(fit.intercept, eta_row, phi_mat, m, s)
    return lam_j, lam_row, eta_raw, phi_raw


class _Accumulator:
    """Max-magnitude merge of per-regression contributions.

    Coordinates estimated once are assigned; coordinates estimated by
    several regressions keep the signed value of largest absolute
    magnitude.  Merge order is fixed (logistic nodes ascending, then
    linear nodes ascending), so the result is deterministic regardless of
    how the fits were scheduled.
    """

    def __init__(self, dims):
        q, p = dims.q, dims.p
        self.dims = dims
        self.lam = np.zeros(q)
        self.lam_pair = np.zeros((q, q))
        self.eta0 = np.zeros(p)
        self.eta = np.zeros((q, p))
        self.phi0 = np.zeros((p, p))
        self.phi = np.zeros((q, p, p))

    def merge_logistic(self, j, lam_j, lam_row, eta_row, phi_mat):
        self.lam[j] = lam_j
        upd = np.abs(lam_row) > np.abs(self.lam_pair[j])
        self.lam_pair[j, upd] = lam_row[upd]
        self.lam_pair[upd, j] = lam_row[upd]
        upd = np.abs(eta_row) > np.abs(self.eta[j])
        self.eta[j, upd] = eta_row[upd]
        upd = np.abs(phi_mat) > np.abs(self.phi[j])
        self.phi[j][upd] = phi_mat[upd]

    def merge_linear(self, gamma, eta0_g, eta_col, phi0_row, phi_block):
        self.eta0[gamma] = eta0_g
        upd = np.abs(eta_col) > np.abs(self.eta[:, gamma])
        self.eta[upd, gamma] = eta_col[upd]
        upd = np.abs(phi0_row) > np.abs(self.phi0[gamma])
        self.phi0[gamma, upd] = phi0_row[upd]
        self.phi0[upd, gamma] = phi0_row[upd]
        upd = np.abs(phi_block) > np.abs(self.phi[:, gamma, :])
        self.phi[:, gamma, :][upd] = phi_block[upd]
        self.phi[:, :, gamma][upd] = phi_block[upd]

    def to_params(self):
        return CGParams(
            dims=self.dims,
            lambda0=0.0,
            lam=self.lam,
            lam_pair=self.lam_pair,
            eta0=self.eta0,
            eta=self.eta,
            phi0=self.phi0,
            phi=self.phi,
        )

    def edge_scores(self):
        return _edge_scores(self.dims, self.lam_pair, self.eta, self.phi0, self.phi)


def _edge_scores(dims, lam_pair, eta, phi0, phi):
    """Edge strengths: max absolute value over the edge's coordinates."""
    q, p = dims.q, dims.p
    scores = {}
    for j in range(q):
        for k in range(j + 1, q):
            v = abs(lam_pair[j, k])
            if v > 0.0:
                scores[(j, k)] = v
    if q and p:
        zy = np.abs(eta)
        if p > 1:
            zy = np.maximum(zy, np.abs(phi).max(axis=2))
        for j in range(q):
            for g in range(p):
                v = zy[j, g]
                if v > 0.0:
                    scores[(j, q + g)] = float(v)
    if p > 1:
        yy = np.abs(phi0).copy()
        np.fill_diagonal(yy, 0.0)
        if q:
            yy = np.maximum(yy, np.abs(phi).max(axis=0))
        for g in range(p):
            for m in range(g + 1, p):
                v = yy[g, m]
                if v > 0.0:
                    scores[(q + g, q + m)] = float(v)
    return scores


@dataclass(frozen=True, eq=False)
class GraphEstimate:
    """Aggregated node-wise estimate at one penalty level.

    ``params`` holds the merged raw-scale coordinates (lambda0 fixed at 0;
    the node-wise scheme does not estimate the normalizing constant).
    ``edge_scores`` maps node pairs (a, b), a < b, to positive strengths;
    absent pairs scored zero.  ``failures`` records node regressions that
    could not be built or read out; their coordinates stay zero.
    """

    params: CGParams
    edge_scores: dict
    rho: float
    variant: str
    failures: tuple = ()
    n_nonconverged: int = 0

    def edges(self, threshold: float = 0.0):
        return frozenset(e for e, v in self.edge_scores.items() if v > threshold)

    def graph(self, threshold: float = 0.0) -> MarkovGraph:
        return MarkovGraph(dims=self.params.dims, edges=self.edges(threshold))

    def to_dot(self, threshold: float = 0.0, names=None, colors=None) -> str:
        return graph_to_dot(self.graph(threshold), names=names, colors=colors)

    def to_json(self) -> str:
        obj = {
            "rho": self.rho,
            "variant": self.variant,
            "failures": list(self.failures),
            "nNonconverged": self.n_nonconverged,
            "edgeScores": [[a, b, v] for (a, b), v in sorted(self.edge_scores.items())],
            "params": params_to_json(self.params),
        }
        return json.dumps(obj, indent=2, sort_keys=True)


def estimate_from_json(text: str) -> GraphEstimate:
    obj = json.loads(text)
    missing = {"params", "edgeScores", "rho", "variant"} - set(obj)
    if missing:
        raise ValidationError(
            f"not a graph estimate: missing keys {sorted(missing)}")
    params = params_from_json(obj["params"])
    scores = {(int(a), int(b)): float(v) for a, b, v in obj["edgeScores"]}
    return GraphEstimate(
        params=params,
        edge_scores=scores,
        rho=float(obj["rho"]),
        variant=obj["variant"],
        failures=tuple(obj.get("failures", ())),
        n_nonconverged=int(obj.get("nNonconverged", 0)),
    )


def _node_task(label, spec, problem, grid, m, s, fit_kwargs):
    """Fit one node along the grid; return per-rho raw-scale contributions."""
    try:
        fits = fit_path(problem, grid, **fit_kwargs)
    except MixedGMError as err:
        return label, None, None, [f"{label}: {err}"]
    noncon = [not f.converged for f in fits]
    out = []
    notes = []
    if spec.kind == "logistic":
        idx = _logistic_index_arrays(spec)
        for f in fits:
            out.append(("logistic", spec.index) + _logistic_pieces(spec, idx, f, m, s))
    else:
        for f in fits:
            try:
                rec = _destd_linear(recover_scale(extract_tilde(spec, problem, f)), m, s)
            except DegenerateFitError as err:
                out.append(None)
                notes.append(f"{label} at rho={f.rho:.6g}: {err}")
                continue
            out.append(
                ("linear", spec.index, rec["eta0"], rec["eta"], rec["phi0_row"], rec["phi_rows"])
            )
    return label, out, noncon, notes


def fit_all(
    data: MixedDataset,
    rho_grid=None,
    variant: str = "weighted",
    num_rho: int = 50,
    min_ratio: float = 0.01,
    standardize: bool = True,
    per_node_scaling: bool = False,
    jobs: int = 1,
    tol: float = 1e-7,
    kkt_tol: float = 1e-7,
    max_sweeps: int = 10_000,
):
    """Fit every node regression along a shared penalty grid.

    One grid serves all regressions: it defaults to a geometric sequence
    from the largest node-wise rho_max down to ``min_ratio`` times it.
    With ``per_node_scaling`` each node's grid is rescaled by its own
    rho_max (off by default; the shared-rho convention keeps estimates at
    one grid point comparable across nodes).

    Continuous columns are standardized to mean 0, variance 1 before
    fitting unless ``standardize=False``; results are always mapped back
    to the raw scale.  Node regressions that cannot be built or read out
    are recorded in ``failures`` and skipped.  Returns a list of
    ``GraphEstimate``, one per grid point, in grid order.
    """
    _check_variant(variant)
    dims = data.schema.dims()
    if any(K != 2 for K in dims.levels):
        raise ValidationError(
            "fit_all handles binary discrete columns; use build_categorical"
        )
    q, p = dims.q, dims.p
    if standardize and p:
        m = data.y.mean(axis=0)
        s = data.y.std(axis=0)
        s = np.where(s == 0.0, 1.0, s)
        work = MixedDataset(z=data.z, y=(data.y - m) / s, schema=data.schema)
    else:
        m = np.zeros(p)
        s = np.ones(p)
        work = data

    built = []
    failures = []
    for j in range(q):
        try:
            built.append((f"z{j}", *build_logistic(work, j, variant)))
        except MixedGMError as err:
            failures.append(f"z{j}: {err}")
    for g in range(p):
        try:
            built.append((f"y{g}", *build_linear(work, g, variant)))
        except MixedGMError as err:
            failures.append(f"y{g}: {err}")
    if not built:
        raise DegenerateFitError("no node regression could be built: " + "; ".join(failures))

    tops = []
    for label, spec, problem in built:
        try:
            tops.append(rho_max(problem))
        except SolverError as err:
            tops.append(0.0)
            if per_node_scaling:
                failures.append(f"{label}: {err}")
    top = max(tops)
    if top <= 0.0:
        raise DegenerateFitError("every node gradient at the null fit is zero")

    if rho_grid is None:
        grid = np.geomspace(top, min_ratio * top, num_rho)
    else:
        grid = np.asarray(rho_grid, dtype=np.float64)
        if grid.ndim != 1 or grid.size == 0:
            raise ValidationError("rho_grid must be a non-empty 1-d sequence")
        if np.any(grid <= 0.0) or np.any(np.diff(grid) >= 0.0):
            raise ValidationError("rho_grid must be positive and strictly decreasing")

    fit_kwargs = {"tol": tol, "kkt_tol": kkt_tol, "max_sweeps": max_sweeps}
    tasks = []
    for (label, spec, problem), node_top in zip(built, tops):
        node_grid = grid
        if per_node_scaling:
            if node_top <= 0.0:
                continue
            node_grid = grid * (node_top / top)
        tasks.append(delayed(_node_task)(label, spec, problem, node_grid, m, s, fit_kwargs))

    accs = [_Accumulator(dims) for _ in grid]
    noncon = np.zeros(grid.size, dtype=int)
    notes = []
    results = Parallel(n_jobs=jobs, prefer="threads", return_as="generator")(tasks)
    for label, contribs, flags, node_notes in results:
        notes.extend(node_notes)
        if contribs is None:
            continue
        noncon += np.asarray(flags, dtype=int)
        for acc, piece in zip(accs, contribs):
            if piece is None:
                continue
            if piece[0] == "logistic":
                acc.merge_logistic(*piece[1:])
            else:
                acc.merge_linear(*piece[1:])

    all_failures = tuple(failures + notes)
    return [
        GraphEstimate(
            params=acc.to_params(),
            edge_scores=acc.edge_scores(),
            rho=float(r),
            variant=variant,
            failures=all_failures,
            n_nonconverged=int(nc),
        )
        for acc, r, nc in zip(accs, grid, noncon)
    ]


# -- categorical designs ------------------------------------------------------
#
# A discrete column with K levels 1..K enters a design as K - 1 indicator
# columns for levels 2..K (level 1 is the baseline whose parameters are
# fixed at zero).  A binary column is its own indicator (value 1 plays the
# role of level 2), so on all-binary data these designs coincide column for
# column with build_logistic / build_linear.  Each discrete node with
# K > 2 is fit one level at a time: logistic regression of "level l vs
# baseline" on the rows taking one of those two levels.  Tilde recovery is
# not applied here; support is scale invariant (K^{gg} > 0), and these fits
# feed the support-union reading of the graph.


def _observed_levels_check(data):
    dims = data.schema.dims()
    for j, K in enumerate(dims.levels):
        col = data.z[:, j]
        values = (0, 1) if K == 2 else tuple(range(1, K + 1))
        for lev in values:
            if not np.any(col == lev):
                raise DegenerateColumnError(
                    f"discrete column {j}: level {lev} is never observed"
                )


def _dummies(z_col, K):
    """Indicator columns and level labels; a binary column is kept as is
    (label None distinguishes it from a genuine level-2 indicator)."""
    if K == 2:
        return [np.asarray(z_col, dtype=np.float64)], [None]
    cols = [(z_col == lev).astype(np.float64) for lev in range(2, K + 1)]
    return cols, list(range(2, K + 1))


def _pair_coord(j, lj, k, lk):
    if lj is None and lk is None:
        return ("lambdaPair",) + _edge(j, k)
    if j < k:
        a, la, b, lb = j, lj, k, lk
    else:
        a, la, b, lb = k, lk, j, lj
    return ("lambdaPairCat", a, b, 2 if la is None else la, 2 if lb is None else lb)


def _cat_logistic(data, j, level, variant):
    dims = data.schema.dims()
    q, p = dims.q, dims.p
    zj = data.z[:, j]
    if level is None:
        rows = np.arange(data.n)
        resp = zj.astype(np.float64)
    else:
        rows = np.flatnonzero((zj == 1) | (zj == level))
        resp = (zj[rows] == level).astype(np.float64)
    _response_check(resp, f"level {level} vs baseline of column z{j}")
    z = data.z[rows]
    y = data.y[rows]

    cols, features = [], []
    for k in range(q):
        if k == j:
            continue
        dcols, labels = _dummies(z[:, k], dims.levels[k])
        for col, lk in zip(dcols, labels):
            cols.append(col)
            features.append(
                Feature(
                    name=f"z{k}" if lk is None else f"z{k}=={lk}",
                    coord=_pair_coord(j, level, k, lk),
                    weight=1.0,
                    sign=1.0,
                    edges=(_edge(j, k),),
                )
            )
    for g in range(p):
        cols.append(y[:, g])
        coord = ("eta", j, g) if level is None else ("etaCat", j, level, g)
        features.append(
            Feature(
                name=f"y{g}", coord=coord, weight=1.0, sign=1.0,
                edges=(_edge(j, q + g),),
            )
        )
    if variant != "simple":
        w = 2.0 if variant == "weighted" else 1.0
        for g in range(p):
            for m in range(g + 1, p):
                cols.append(y[:, g] * y[:, m])
                coord = (
                    ("phi", j, g, m) if level is None else ("phiCat", j, level, g, m)
                )
                features.append(
                    Feature(
                        name=f"y{g}*y{m}", coord=coord, weight=w, sign=-1.0,
                        edges=(_edge(j, q + g), _edge(j, q + m)),
                    )
                )
    X = np.column_stack(cols) if cols else np.empty((rows.size, 0))
    spec = NodeRegressionSpec("logistic", j, variant, dims, tuple(features), level=level)
    problem = PenalizedProblem(
        X, resp, loss="logistic",
        weights=np.array([f.weight for f in features]),
        groups=spec.group_indices() or None,
        fit_intercept=True,
    )
    return spec, problem


def _cat_linear(data, gamma, variant):
    dims = data.schema.dims()
    q, p = dims.q, dims.p
    dummy_blocks = [_dummies(data.z[:, j], dims.levels[j]) for j in range(q)]

    cols, features = [], []
    for j in range(q):
        dcols, labels = dummy_blocks[j]
        for col, lj in zip(dcols, labels):
            cols.append(col)
            coord = ("eta", j, gamma) if lj is None else ("etaCat", j, lj, gamma)
            features.append(
                Feature(
                    name=f"z{j}" if lj is None else f"z{j}=={lj}",
                    coord=coord, weight=1.0, sign=1.0,
                    edges=(_edge(j, q + gamma),),
                )
            )
    for m in range(p):
        if m == gamma:
            continue
        cols.append(data.y[:, m])
        features.append(
            Feature(
                name=f"y{m}", coord=("phi0",) + _edge(gamma, m),
                weight=1.0, sign=-1.0,
                edges=(_edge(q + gamma, q + m),),
            )
        )
    if variant != "simple":
        w = 2.0 if variant == "weighted" else 1.0
        for m in range(p):
            if m == gamma:
                continue
            for j in range(q):
                dcols, labels = dummy_blocks[j]
                for col, lj in zip(dcols, labels):
                    cols.append(data.y[:, m] * col)
                    g1, g2 = _edge(gamma, m)
                    coord = (
                        ("phi", j, g1, g2)
                        if lj is None
                        else ("phiCat", j, lj, g1, g2)
                    )
                    features.append(
                        Feature(
                            name=(f"y{m}*z{j}" if lj is None else f"y{m}*(z{j}=={lj})"),
                            coord=coord, weight=w, sign=-1.0,
                            edges=(_edge(j, q + gamma), _edge(q + gamma, q + m)),
                        )
                    )
    X = np.column_stack(cols) if cols else np.empty((data.n, 0))
    spec = NodeRegressionSpec("linear", gamma, variant, dims, tuple(features))
    problem = PenalizedProblem(
        X, data.y[:, gamma], loss="squared",
        weights=np.array([f.weight for f in features]),
        groups=spec.group_indices() or None,
        fit_intercept=True,
    )
    return spec, problem


def build_categorical(data: MixedDataset, variant: str = "weighted"):
    """All node regressions of a dataset with general discrete columns.

    Returns a list of ``(spec, problem)`` pairs: one logistic problem per
    non-baseline level of every discrete column (binary columns get a
    single problem on all rows), then one linear problem per continuous
    column.  Raises ``DegenerateColumnError`` when a declared level is
    never observed.
    """
    _check_variant(variant)
    dims = data.schema.dims()
    _observed_levels_check(data)
    out = []
    for j in range(dims.q):
        if dims.levels[j] == 2:
            out.append(_cat_logistic(data, j, None, variant))
        else:
            for lev in range(2, dims.levels[j] + 1):
                out.append(_cat_logistic(data, j, lev, variant))
    for g in range(dims.p):
        out.append(_cat_linear(data, g, variant))
    return out


def coord_edges(coord: tuple, dims: MixedDims):
    """Candidate edges whose parameter group contains the coordinate.

    Interaction coordinates belong to three groups: phi_j^{gm} sits in the
    groups of (Z_j, Y_g), (Z_j, Y_m) and (Y_g, Y_m).  Intercept-like
    coordinates belong to none.
    """
    q = dims.q
    kind = coord[0]
    if kind in ("lambdaPair", "lambdaPairCat"):
        return (_edge(coord[1], coord[2]),)
    if kind == "eta":
        return (_edge(coord[1], q + coord[2]),)
    if kind == "etaCat":
        return (_edge(coord[1], q + coord[3]),)
    if kind == "phi0":
        return (_edge(q + coord[1], q + coord[2]),)
    if kind == "phi":
        j, g, m = coord[1], coord[2], coord[3]
    elif kind == "phiCat":
        j, g, m = coord[1], coord[3], coord[4]
    else:
        return ()
    return (_edge(j, q + g), _edge(j, q + m), _edge(q + g, q + m))


def categorical_edges(
    data: MixedDataset,
    rho: float,
    variant: str = "weighted",
    tol: float = 0.0,
    **fit_kwargs,
) -> frozenset:
    """Support-union graph reading of the categorical regressions.

    Fits every problem of :func:`build_categorical` at one penalty level
    and collects the edges of every coordinate with |coefficient| > tol.
    """
    dims = data.schema.dims()
    edges = set()
    for spec, problem in build_categorical(data, variant):
        fit = fit_weighted_l1(problem, rho, **fit_kwargs)
        for f, c in zip(spec.features, fit.coefs):
            if abs(c) > tol:
                edges.update(coord_edges(f.coord, dims))
    return frozenset(edges)
