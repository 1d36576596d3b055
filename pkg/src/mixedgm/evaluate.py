"""Recovery evaluation: ROC tables, capped AUC, stability selection.

Estimates are compared against the generating parameters at two levels.
The parameter level scores every interaction coordinate (lambda_jk, eta_j^g,
off-diagonal phi_0^{gm}, phi_j^{gm}; intercept-like coordinates lambda_j,
eta_0^g and the diagonal of phi_0 are excluded).  The edge level scores
candidate node pairs.  Both use exact-zero truth and exact-zero estimates;
penalized fits produce exact zeros, so no threshold is involved.

The AUC is the trapezoidal area under the ROC restricted to a false
positive rate cap and normalized by the cap, so a perfect method scores 1
regardless of the cap.  Stability selection refits the model on random
half subsamples and keeps the edges selected in at least a fixed fraction
of them.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .data import MixedDataset
from .errors import MixedGMError, ValidationError
from .model import CGParams, MarkovGraph, coord_value, graph_of, graph_to_dot
from .neighborhood import GraphEstimate, fit_all

__all__ = [
    "RocRow",
    "RocTable",
    "StabilityResult",
    "roc",
    "auc",
    "average_roc",
    "write_roc_csv",
    "read_roc_csv",
    "stability_select",
]

LEVELS = ("parameter", "edge")


@dataclass(frozen=True)
class RocRow:
    """One operating point: counts and rates at one penalty level.

    Counts are floats so that rows averaged across replicates stay
    representable.
    """

    rho: float
    level: str
    tp: float
    fp: float
    tpr: float
    fpr: float

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValidationError(f"unknown ROC level {self.level!r}")


@dataclass(frozen=True)
class RocTable:
    """ROC rows in path order, two rows (parameter, edge) per estimate."""

    rows: tuple

    def level_rows(self, level: str):
        if level not in LEVELS:
            raise ValidationError(f"unknown ROC level {level!r}")
        return [r for r in self.rows if r.level == level]


def _param_coords(dims):
    q, p = dims.q, dims.p
    for j in range(q):
        for k in range(j + 1, q):
            yield ("lambdaPair", j, k)
    for j in range(q):
        for g in range(p):
            yield ("eta", j, g)
    for g in range(p):
        for m in range(g + 1, p):
            yield ("phi0", g, m)
    for j in range(q):
        for g in range(p):
            for m in range(g + 1, p):
                yield ("phi", j, g, m)


def _rate(count, denom):
    return count / denom if denom else 0.0


def roc(truth: CGParams, estimates, graph: MarkovGraph | None = None) -> RocTable:
    """ROC table of a path of estimates against the generating parameters.

    ``graph`` overrides the truth graph (default: nonzero pattern of the
    truth parameters).  Parameter-level truth is the exact nonzero pattern
    of the interaction coordinates.
    """
    if isinstance(estimates, GraphEstimate):
        estimates = [estimates]
    if not estimates:
        raise ValidationError("need at least one estimate")
    dims = truth.dims
    for est in estimates:
        if est.params.dims != dims:
            raise ValidationError("estimate dimensions do not match the truth")
    if graph is None:
        graph = graph_of(truth)

    coords = list(_param_coords(dims))
    truth_on = np.array([coord_value(truth, c) != 0.0 for c in coords])
    n_pos_param = int(truth_on.sum())
    n_neg_param = len(coords) - n_pos_param

    n_nodes = dims.n_nodes
    all_pairs = [(u, v) for u in range(n_nodes) for v in range(u + 1, n_nodes)]
    true_edges = graph.edges
    n_pos_edge = len(true_edges)
    n_neg_edge = len(all_pairs) - n_pos_edge

    rows = []
    for est in estimates:
        est_on = np.array([coord_value(est.params, c) != 0.0 for c in coords])
        tp = int(np.sum(est_on & truth_on))
        fp = int(np.sum(est_on & ~truth_on))
        rows.append(
            RocRow(
                rho=est.rho, level="parameter", tp=tp, fp=fp,
                tpr=_rate(tp, n_pos_param), fpr=_rate(fp, n_neg_param),
            )
        )
        picked = est.edges()
        tp = sum(1 for e in picked if e in true_edges)
        fp = len(picked) - tp
        rows.append(
            RocRow(
                rho=est.rho, level="edge", tp=tp, fp=fp,
                tpr=_rate(tp, n_pos_edge), fpr=_rate(fp, n_neg_edge),
            )
        )
    return RocTable(rows=tuple(rows))


def auc(table: RocTable, fpr_cap: float, level: str = "edge") -> float:
    """Trapezoidal area under the ROC up to ``fpr_cap``, divided by the cap.

    Points are sorted by FPR (ties keep the best TPR), the curve starts at
    (0, 0), is cut at the cap by linear interpolation, and is extended at
    constant TPR when it ends before the cap.
    """
    if not 0.0 < fpr_cap <= 1.0:
        raise ValidationError("fpr_cap must be in (0, 1]")
    rows = table.level_rows(level)
    if not rows:
        raise ValidationError(f"no rows at level {level!r}")
    best = {}
    for r in rows:
        best[r.fpr] = max(best.get(r.fpr, 0.0), r.tpr)
    best.setdefault(0.0, 0.0)
    pts = sorted(best.items())

    fprs = [pts[0][0]]
    tprs = [pts[0][1]]
    for f, t in pts[1:]:
        if f > fpr_cap:
            f0, t0 = fprs[-1], tprs[-1]
            tprs.append(t0 + (t - t0) * (fpr_cap - f0) / (f - f0))
            fprs.append(fpr_cap)
            break
        fprs.append(f)
        tprs.append(t)
    if fprs[-1] < fpr_cap:
        fprs.append(fpr_cap)
        tprs.append(tprs[-1])
    return float(np.trapezoid(tprs, fprs)) / fpr_cap


def average_roc(tables) -> RocTable:
    """Pointwise mean of ROC tables with identical (rho, level) layouts."""
    tables = list(tables)
    if not tables:
        raise ValidationError("need at least one table")
    layout = [(r.rho, r.level) for r in tables[0].rows]
    for t in tables[1:]:
        if [(r.rho, r.level) for r in t.rows] != layout:
            raise ValidationError("tables have different (rho, level) layouts")
    rows = []
    for i, (rho, level) in enumerate(layout):
        group = [t.rows[i] for t in tables]
        rows.append(
            RocRow(
                rho=rho,
                level=level,
                tp=float(np.mean([r.tp for r in group])),
                fp=float(np.mean([r.fp for r in group])),
                tpr=float(np.mean([r.tpr for r in group])),
                fpr=float(np.mean([r.fpr for r in group])),
            )
        )
    return RocTable(rows=tuple(rows))


_CSV_HEADER = ["rho", "level", "TP", "FP", "TPR", "FPR"]


def write_roc_csv(table: RocTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_HEADER)
        for r in table.rows:
            w.writerow([repr(r.rho), r.level, repr(r.tp), repr(r.fp),
                        repr(r.tpr), repr(r.fpr)])


def read_roc_csv(path) -> RocTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _CSV_HEADER:
            raise ValidationError(
                f"bad ROC header {header!r}, expected {_CSV_HEADER!r}"
            )
        rows = []
        for rec in reader:
            if len(rec) != 6:
                raise ValidationError(f"bad ROC row {rec!r}")
            rows.append(
                RocRow(
                    rho=float(rec[0]), level=rec[1], tp=float(rec[2]),
                    fp=float(rec[3]), tpr=float(rec[4]), fpr=float(rec[5]),
                )
            )
    return RocTable(rows=tuple(rows))


@dataclass(frozen=True, eq=False)
class StabilityResult:
    """Outcome of stability selection at one penalty level.

    ``edge_frequency`` maps node pairs to the fraction of the B subsample
    fits that selected them (failed fits count as not selecting anything).
    ``kept_edges`` are the pairs at or above the threshold.
    """

    dims: object
    rho: float
    variant: str
    threshold: float
    n_subsamples: int
    edge_frequency: dict
    kept_edges: frozenset
    n_failures: int = 0
    failures: tuple = ()

    def graph(self) -> MarkovGraph:
        return MarkovGraph(dims=self.dims, edges=self.kept_edges)

    def to_dot(self, names=None, colors=None) -> str:
        return graph_to_dot(self.graph(), names=names, colors=colors)

    def to_json(self) -> str:
        obj = {
            "q": self.dims.q,
            "p": self.dims.p,
            "rho": self.rho,
            "variant": self.variant,
            "threshold": self.threshold,
            "nSubsamples": self.n_subsamples,
            "nFailures": self.n_failures,
            "failures": list(self.failures),
            "edgeFrequency": [
                [a, b, f] for (a, b), f in sorted(self.edge_frequency.items())
            ],
            "keptEdges": [list(e) for e in sorted(self.kept_edges)],
        }
        return json.dumps(obj, indent=2, sort_keys=True)


def stability_select(
    data: MixedDataset,
    rho: float,
    n_subsamples: int = 100,
    threshold: float = 0.9,
    seed=None,
    variant: str = "weighted",
    jobs: int = 1,
    **fit_kwargs,
) -> StabilityResult:
    """Stability selection: refit on half subsamples, keep frequent edges.

    Draws ``n_subsamples`` subsets of floor(n/2) rows without replacement,
    fits every node regression at the single penalty ``rho`` on each, and
    keeps the edges selected in at least ``threshold`` of the draws.
    Subsamples whose fit fails entirely count as selecting nothing and are
    reported in ``failures``; so do partial per-node failures.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValidationError("threshold must be in (0, 1]")
    if n_subsamples < 1:
        raise ValidationError("need at least one subsample")
    if rho <= 0.0:
        raise ValidationError("rho must be positive")
    half = data.n // 2
    if half < 1:
        raise ValidationError("dataset too small to halve")

    counts: dict = {}
    failures = []
    n_failed = 0
    root = np.random.SeedSequence(seed)
    for b, child in enumerate(root.spawn(n_subsamples)):
        rng = np.random.default_rng(child)
        rows = rng.choice(data.n, size=half, replace=False)
        sub = MixedDataset(z=data.z[rows], y=data.y[rows], schema=data.schema)
        try:
            est = fit_all(sub, rho_grid=[rho], variant=variant, jobs=jobs, **fit_kwargs)[0]
        except MixedGMError as err:
            n_failed += 1
            failures.append(f"subsample {b}: {err}")
            continue
        if est.failures:
            failures.append(f"subsample {b}: " + "; ".join(est.failures))
        for e in est.edges():
            counts[e] = counts.get(e, 0) + 1

    freq = {e: c / n_subsamples for e, c in counts.items()}
    kept = frozenset(e for e, f in freq.items() if f >= threshold)
    return StabilityResult(
        dims=data.schema.dims(),
        rho=rho,
        variant=variant,
        threshold=threshold,
        n_subsamples=n_subsamples,
        edge_frequency=freq,
        kept_edges=kept,
        n_failures=n_failed,
        failures=tuple(failures),
    )
