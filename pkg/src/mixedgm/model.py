"""Core representation of the simplified conditional Gaussian model.

The joint density over a binary vector z in {0,1}^q and a continuous vector
y in R^p is

    log f(z, y) = lambda0 + sum_j lambda_j z_j + sum_{j>k} lambda_jk z_j z_k
                  + y' (eta0 + sum_j eta_j z_j)
                  - (1/2) y' (phi0 + sum_j phi_j z_j) y ,

where every phi_j has a zero diagonal and lambda0 is the log normalizing
constant. Collecting terms for a fixed cell z gives the canonical triple

    g_z = lambda0 + sum_j lambda_j z_j + sum_{j>k} lambda_jk z_j z_k ,
    h_z = eta0 + sum_j eta_j z_j ,
    K_z = phi0 + sum_j phi_j z_j ,

under which Y | Z=z is N(K_z^{-1} h_z, K_z^{-1}) and

    P(Z=z) = (2 pi)^(p/2) det(K_z)^(-1/2) exp(g_z + h_z' K_z^{-1} h_z / 2).

Nodes of the Markov graph are indexed 0 .. q+p-1 with the first q indices
standing for the binary variables. Each candidate edge corresponds to a
group of parameters whose joint nullity is equivalent to the absence of
that edge:

    (Z_j, Z_k)  <->  { lambda_jk }                                (1 value)
    (Z_j, Y_g)  <->  { eta_j^g } + { phi_j^{gm} : m != g }        (p values)
    (Y_g, Y_m)  <->  { phi_0^{gm} } + { phi_j^{gm} : all j }      (q+1 values)

lambda0 is kept on the log scale throughout to avoid underflow for large p.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionError,
    EnumerationCapError,
    NotPositiveDefiniteError,
    ValidationError,
)

__all__ = [
    "MixedDims",
    "CGParams",
    "CanonicalTriple",
    "CellMoments",
    "MarkovGraph",
    "EdgeGroup",
    "canonical_at",
    "moments_at",
    "normalize",
    "log_density",
    "graph_of",
    "edge_group",
    "edge_groups",
    "coord_value",
    "check_positive_definite",
    "cells",
    "cell_log_probs",
    "node_name",
    "params_to_json",
    "params_from_json",
    "graph_to_json",
    "graph_from_json",
    "graph_to_dot",
]


def _readonly(a, dtype=float, shape=None):
    arr = np.array(a, dtype=dtype)
    if shape is not None and arr.shape != shape:
        raise DimensionError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("parameter arrays must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MixedDims:
    """Dimensions of the mixed vector: q binary and p continuous variables.

    ``levels`` holds the number of levels K_j of each discrete variable and
    defaults to 2 everywhere, which is the only case the generative model
    supports. Level counts above 2 occur only in the categorical designs of
    :mod:`mixedgm.neighborhood`.
    """

    q: int
    p: int
    levels: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.q < 0 or self.p < 0 or self.q + self.p < 1:
            raise DimensionError("need q >= 0, p >= 0 and q + p >= 1")
        levels = self.levels
        if levels is None:
            levels = (2,) * self.q
        levels = tuple(int(k) for k in levels)
        if len(levels) != self.q:
            raise DimensionError("levels must have one entry per discrete variable")
        if any(k < 2 for k in levels):
            raise ValidationError("every level count K_j must be at least 2")
        object.__setattr__(self, "levels", levels)

    @property
    def n_nodes(self) -> int:
        return self.q + self.p


def node_name(dims: MixedDims, i: int) -> str:
    """Display name of flat node index i: z1..zq then y1..yp."""
    if not 0 <= i < dims.n_nodes:
        raise DimensionError(f"node index {i} out of range")
    return f"z{i + 1}" if i < dims.q else f"y{i - dims.q + 1}"


@dataclass(frozen=True, eq=False)
class CGParams:
    """Full parameter set of the simplified model.

    Fields mirror the symbols of the density: ``lambda0`` (scalar, log
    scale), ``lam`` (q,), ``lam_pair`` (q, q) symmetric with zero diagonal,
    ``eta0`` (p,), ``eta`` (q, p), ``phi0`` (p, p) symmetric, and ``phi``
    (q, p, p) with each slice symmetric and zero on the diagonal.

    Construction checks shapes, symmetry and the zero-diagonal constraint
    exactly. Positive definiteness of K_z across all 2^q cells is the
    remaining type invariant; it is certified by
    :func:`check_positive_definite` and implicitly by any operation that
    factorizes the cells (``normalize``, ``moments_at``).
    """

    dims: MixedDims
    lambda0: float
    lam: np.ndarray
    lam_pair: np.ndarray
    eta0: np.ndarray
    eta: np.ndarray
    phi0: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        q, p = self.dims.q, self.dims.p
        if any(k != 2 for k in self.dims.levels):
            raise ValidationError("CGParams is defined for binary variables only")
        object.__setattr__(self, "lambda0", float(self.lambda0))
        object.__setattr__(self, "lam", _readonly(self.lam, shape=(q,)))
        object.__setattr__(self, "lam_pair", _readonly(self.lam_pair, shape=(q, q)))
        object.__setattr__(self, "eta0", _readonly(self.eta0, shape=(p,)))
        object.__setattr__(self, "eta", _readonly(self.eta, shape=(q, p)))
        object.__setattr__(self, "phi0", _readonly(self.phi0, shape=(p, p)))
        object.__setattr__(self, "phi", _readonly(self.phi, shape=(q, p, p)))
        if not np.array_equal(self.lam_pair, self.lam_pair.T):
            raise ValidationError("lam_pair must be exactly symmetric")
        if q and np.any(np.diagonal(self.lam_pair) != 0.0):
            raise ValidationError("lam_pair must have a zero diagonal")
        if not np.array_equal(self.phi0, self.phi0.T):
            raise ValidationError("phi0 must be exactly symmetric")
        for j in range(q):
            if not np.array_equal(self.phi[j], self.phi[j].T):
                raise ValidationError(f"phi[{j}] must be exactly symmetric")
        if p and q and np.any(np.diagonal(self.phi, axis1=1, axis2=2) != 0.0):
            raise ValidationError("every phi[j] must have a zero diagonal")

    def with_lambda0(self, lambda0: float) -> "CGParams":
        return dataclasses.replace(self, lambda0=float(lambda0))

    @staticmethod
    def zeros(dims: MixedDims) -> "CGParams":
        q, p = dims.q, dims.p
        return CGParams(
            dims=dims,
            lambda0=0.0,
            lam=np.zeros(q),
            lam_pair=np.zeros((q, q)),
            eta0=np.zeros(p),
            eta=np.zeros((q, p)),
            phi0=np.eye(p),
            phi=np.zeros((q, p, p)),
        )


@dataclass(frozen=True, eq=False)
class CanonicalTriple:
    """Canonical parameters (g_z, h_z, K_z) of one cell."""

    g: float
    h: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g", float(self.g))
        h = _readonly(self.h)
        K = _readonly(self.K)
        if h.ndim != 1 or K.shape != (h.size, h.size):
            raise DimensionError("h must be a vector and K a matching square matrix")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "K", K)
        _cholesky(K)


@dataclass(frozen=True, eq=False)
class CellMoments:
    """Moments (P_z, xi_z, Sigma_z) of one cell.

    ``prob`` is a probability only when the params were normalized first;
    otherwise it is the raw value of the moment formula.
    """

    prob: float
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "prob", float(self.prob))
        object.__setattr__(self, "mean", _readonly(self.mean))
        object.__setattr__(self, "cov", _readonly(self.cov))


@dataclass(frozen=True)
class MarkovGraph:
    """Undirected graph over q + p nodes; first q indices are binary nodes."""

    dims: MixedDims
    edges: frozenset

    def __post_init__(self):
        n = self.dims.n_nodes
        norm = set()
        for e in self.edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise ValidationError("self loops are not allowed")
            if not (0 <= u < n and 0 <= v < n):
                raise DimensionError(f"edge {e} out of range for {n} nodes")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    def degree(self, i: int) -> int:
        return sum(1 for (u, v) in self.edges if u == i or v == i)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True)
class EdgeGroup:
    """One candidate edge together with its parameter coordinates.

    Coordinates are addresses into :class:`CGParams`:
    ``("lambdaPair", j, k)`` with j < k, ``("eta", j, g)``,
    ``("phi0", g, m)`` with g < m, and ``("phi", j, g, m)`` with g < m.
    """

    edge: tuple[int, int]
    coords: tuple[tuple, ...]


def _cholesky(K: np.ndarray) -> np.ndarray:
    if K.shape[0] == 0:
        return np.zeros((0, 0))
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(
            "precision matrix is not positive definite"
        ) from None


def _check_z(dims: MixedDims, z) -> np.ndarray:
    z = np.asarray(z)
    if z.shape != (dims.q,):
        raise DimensionError(f"z must have length q={dims.q}, got shape {z.shape}")
    if z.size and not np.isin(z, (0, 1)).all():
        raise ValidationError("z entries must be 0 or 1")
    return z.astype(float)


def canonical_at(params: CGParams, z) -> CanonicalTriple:
    """Canonical triple (g_z, h_z, K_z) of the cell z.

    Raises ``NotPositiveDefiniteError`` when K_z is not positive definite
    at this cell.
    """
    z = _check_z(params.dims, z)
    g = params.lambda0 + float(params.lam @ z) + 0.5 * float(z @ params.lam_pair @ z)
    h = params.eta0 + params.eta.T @ z
    K = params.phi0 + np.tensordot(z, params.phi, axes=1)
    return CanonicalTriple(g=g, h=h, K=K)


def moments_at(params: CGParams, z) -> CellMoments:
    """Moments (P_z, xi_z, Sigma_z) of the cell z."""
    tri = canonical_at(params, z)
    p = params.dims.p
    L = _cholesky(tri.K)
    if p == 0:
        return CellMoments(prob=math.exp(tri.g), mean=np.zeros(0), cov=np.zeros((0, 0)))
    half_logdet = float(np.sum(np.log(np.diagonal(L))))
    u = np.linalg.solve(L, tri.h)
    mean = np.linalg.solve(L.T, u)
    cov = np.linalg.inv(tri.K)
    cov = 0.5 * (cov + cov.T)
    log_prob = 0.5 * p * math.log(2.0 * math.pi) - half_logdet + tri.g + 0.5 * float(u @ u)
    return CellMoments(prob=math.exp(log_prob), mean=mean, cov=cov)


def cells(q: int) -> np.ndarray:
    """All binary cells as a (2^q, q) array; bit j of the row index is z_j."""
    idx = np.arange(2**q, dtype=np.int64)
    return ((idx[:, None] >> np.arange(q)) & 1).astype(np.int8)


def _cell_log_terms(params: CGParams) -> np.ndarray:
    """Per-cell log of the moment formula without the lambda0 factor."""
    q, p = params.dims.q, params.dims.p
    zmat = cells(q)
    out = np.empty(zmat.shape[0])
    for i, z in enumerate(zmat):
        zf = z.astype(float)
        a = float(params.lam @ zf) + 0.5 * float(zf @ params.lam_pair @ zf)
        h = params.eta0 + params.eta.T @ zf
        K = params.phi0 + np.tensordot(zf, params.phi, axes=1)
        L = _cholesky(K)
        if p:
            half_logdet = float(np.sum(np.log(np.diagonal(L))))
            u = np.linalg.solve(L, h)
            quad = 0.5 * float(u @ u)
        else:
            half_logdet = 0.0
            quad = 0.0
        out[i] = 0.5 * p * math.log(2.0 * math.pi) - half_logdet + a + quad
    return out


def _require_enumerable(dims: MixedDims, max_q: int, what: str) -> None:
    if dims.q > max_q:
        raise EnumerationCapError(
            f"{what} enumerates 2^q cells and is capped at q <= {max_q}; got q={dims.q}"
        )


def normalize(params: CGParams, max_q: int = 20) -> CGParams:
    """Return params with lambda0 set so that the cell probabilities sum to 1.

    Enumerates all 2^q cells, so q is capped (default 20). Every cell
    precision matrix is factorized along the way, which certifies the
    positive-definiteness invariant as a side effect.
    """
    _require_enumerable(params.dims, max_q, "normalize")
    return params.with_lambda0(-float(logsumexp(_cell_log_terms(params))))


def cell_log_probs(params: CGParams, max_q: int = 20) -> np.ndarray:
    """log P_z for every cell, in the row order of :func:`cells`."""
    _require_enumerable(params.dims, max_q, "cell_log_probs")
    return params.lambda0 + _cell_log_terms(params)


def log_density(params: CGParams, z, y) -> float:
    """log f(z, y). Meaningful as a density only for normalized params."""
    tri = canonical_at(params, z)
    y = np.asarray(y, dtype=float)
    if y.shape != (params.dims.p,):
        raise DimensionError(f"y must have length p={params.dims.p}, got {y.shape}")
    return tri.g + float(tri.h @ y) - 0.5 * float(y @ tri.K @ y)


def check_positive_definite(params: CGParams, enum_cap: int = 12, margin: float = 0.1) -> None:
    """Certify that K_z is positive definite for every cell z.

    For q <= enum_cap this enumerates all cells and factorizes each K_z.
    For larger q it falls back to a sufficient condition: each diagonal
    entry of phi0 must exceed the row sum of absolute off-diagonals of
    phi0 plus all phi_j by at least ``margin``. Raises
    ``NotPositiveDefiniteError`` when certification fails.
    """
    q, p = params.dims.q, params.dims.p
    if p == 0:
        return
    if q <= enum_cap:
        for z in cells(q):
            zf = z.astype(float)
            _cholesky(params.phi0 + np.tensordot(zf, params.phi, axes=1))
        return
    off = np.abs(params.phi0).sum(axis=1) - np.abs(np.diagonal(params.phi0))
    off = off + np.abs(params.phi).sum(axis=(0, 2))
    slack = np.diagonal(params.phi0) - off
    if np.any(slack < margin):
        worst = int(np.argmin(slack))
        raise NotPositiveDefiniteError(
            "diagonal dominance certificate failed at continuous index "
            f"{worst}: slack {slack[worst]:.6g} < margin {margin}"
        )


def edge_group(dims: MixedDims, u: int, v: int) -> EdgeGroup:
    """Parameter group of the candidate edge (u, v), flat node indices."""
    q = dims.q
    u, v = min(u, v), max(u, v)
    if u == v or not (0 <= u < dims.n_nodes and 0 <= v < dims.n_nodes):
        raise DimensionError(f"bad edge ({u}, {v})")
    if v < q:
        coords = (("lambdaPair", u, v),)
    elif u < q:
        j, g = u, v - q
        coords = (("eta", j, g),) + tuple(
            ("phi", j, min(g, m), max(g, m)) for m in range(dims.p) if m != g
        )
    else:
        g, m = u - q, v - q
        coords = (("phi0", g, m),) + tuple(("phi", j, g, m) for j in range(q))
    return EdgeGroup(edge=(u, v), coords=coords)


def edge_groups(dims: MixedDims) -> list[EdgeGroup]:
    """Groups of all candidate edges, sorted by node pair."""
    n = dims.n_nodes
    return [edge_group(dims, u, v) for u in range(n) for v in range(u + 1, n)]


def coord_value(params: CGParams, coord: tuple) -> float:
    """Read one parameter coordinate addressed as in :class:`EdgeGroup`."""
    kind = coord[0]
    if kind == "lambdaPair":
        return float(params.lam_pair[coord[1], coord[2]])
    if kind == "eta":
        return float(params.eta[coord[1], coord[2]])
    if kind == "phi0":
        return float(params.phi0[coord[1], coord[2]])
    if kind == "phi":
        return float(params.phi[coord[1], coord[2], coord[3]])
    if kind == "lam":
        return float(params.lam[coord[1]])
    if kind == "eta0":
        return float(params.eta0[coord[1]])
    raise ValidationError(f"unknown coordinate kind {kind!r}")


def graph_of(params: CGParams, tol: float = 0.0) -> MarkovGraph:
    """Markov graph implied by the parameters.

    An edge is present iff some coordinate of its group exceeds ``tol`` in
    absolute value. The default tol=0 is meant for synthetic parameters
    whose zeros are exact; estimation-side thresholding lives in
    :mod:`mixedgm.evaluate`.
    """
    if tol < 0:
        raise ValidationError("tol must be nonnegative")
    edges = set()
    for grp in edge_groups(params.dims):
        if any(abs(coord_value(params, c)) > tol for c in grp.coords):
            edges.add(grp.edge)
    return MarkovGraph(dims=params.dims, edges=frozenset(edges))


# ---------------------------------------------------------------------------
# serialization

def params_to_json(params: CGParams) -> dict:
    """JSON-compatible dict with keys named after the model symbols."""
    return {
        "q": params.dims.q,
        "p": params.dims.p,
        "levels": list(params.dims.levels),
        "lambda0": params.lambda0,
        "lambda": params.lam.tolist(),
        "lambdaPair": params.lam_pair.tolist(),
        "eta0": params.eta0.tolist(),
        "eta": params.eta.tolist(),
        "phi0": params.phi0.tolist(),
        "phi": params.phi.tolist(),
    }


def params_from_json(obj: dict) -> CGParams:
    dims = MixedDims(q=int(obj["q"]), p=int(obj["p"]), levels=tuple(obj["levels"]))
    return CGParams(
        dims=dims,
        lambda0=float(obj["lambda0"]),
        lam=obj["lambda"],
        lam_pair=obj["lambdaPair"],
        eta0=obj["eta0"],
        eta=obj["eta"],
        phi0=obj["phi0"],
        phi=obj["phi"],
    )


def graph_to_json(graph: MarkovGraph) -> dict:
    return {
        "q": graph.dims.q,
        "p": graph.dims.p,
        "edges": [list(e) for e in graph.sorted_edges()],
    }


def graph_from_json(obj: dict) -> MarkovGraph:
    dims = MixedDims(q=int(obj["q"]), p=int(obj["p"]))
    return MarkovGraph(dims=dims, edges=frozenset(tuple(e) for e in obj["edges"]))


def graph_to_dot(
    graph: MarkovGraph,
    names: list[str] | None = None,
    colors: dict[str, str] | None = None,
) -> str:
    """Render the graph in DOT: circles for discrete nodes, squares for
    continuous ones.

    ``names`` overrides the default z1..zq / y1..yp labels; ``colors`` maps a
    node name to a fill color.
    """
    dims = graph.dims
    if names is None:
        names = [node_name(dims, i) for i in range(dims.n_nodes)]
    if len(names) != dims.n_nodes:
        raise DimensionError("names must cover every node")
    lines = ["graph G {"]
    for i, name in enumerate(names):
        shape = "circle" if i < dims.q else "square"
        attrs = [f"shape={shape}"]
        if colors and name in colors:
            attrs.append("style=filled")
            attrs.append(f'fillcolor="{colors[name]}"')
        lines.append(f'  "{name}" [{", ".join(attrs)}];')
    for u, v in graph.sorted_edges():
        lines.append(f'  "{names[u]}" -- "{names[v]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
