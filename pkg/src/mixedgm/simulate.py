"""Ground-truth generation: graphs, parameters, and exact samples.

Three graph kinds are supported. ``chain`` links the first numEdges+1 nodes
consecutively. ``er`` draws exactly numEdges distinct pairs uniformly at
random and regenerates the whole graph whenever a degree exceeds the cap.
``hub`` gives node 0 exactly hubDegree edges and draws the remaining edges
among the other nodes, with the cap applying to the non-hub nodes only.
The first q flat node indices are the binary variables.

Parameters are filled edge by edge: main-effect values (lambda_j,
lambda_jk, eta_j) are +-mainValue and off-diagonal phi entries +-phiValue,
both times a global scale. A phi_j^{gm} entry is filled only when the
triple (Z_j, Y_g, Y_m) is complete in the graph, so that the parameters
stay Markov with respect to the requested graph. The phi0 diagonal is set
to the row sum of absolute off-diagonals of phi0 plus all phi_j plus a
margin of 0.1, which makes every cell precision matrix diagonally dominant
and therefore positive definite.

Sampling is exact: cells are drawn from the enumerated P_z table and the
continuous block from the cell's Gaussian via a Cholesky transform of
standard normals. All randomness comes from numpy's default generator
(PCG64); parallel replication should spawn child seeds with
``np.random.SeedSequence``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MixedDataset, default_schema
from .errors import BudgetExhaustedError, InfeasibleSpecError, ValidationError
from .model import (
    CGParams,
    MarkovGraph,
    MixedDims,
    canonical_at,
    cell_log_probs,
    cells,
    edge_group,
    normalize,
)

__all__ = [
    "GraphSpec",
    "ParamGenSpec",
    "gen_graph",
    "gen_params",
    "sample",
    "complete_block_graph",
]

_KINDS = ("chain", "er", "hub")


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for one random graph.

    kind: "chain", "er" (Erdos-Renyi with a degree cap), or "hub".
    num_edges: exact edge count of the result.
    max_degree: degree cap; None means uncapped. The hub node is exempt.
    hub_degree: exact degree of node 0 (hub graphs only).
    triangle_free: reject graphs containing a triangle, i.e. a complete
        3-subgraph. Complete subgraphs of higher order contain triangles,
        so this screens out all of them.
    seed: seed for the graph draw.
    """

    kind: str
    dims: MixedDims
    num_edges: int
    max_degree: int | None = None
    hub_degree: int | None = None
    triangle_free: bool = False
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown graph kind {self.kind!r}")


def _validate(spec: GraphSpec) -> int:
    n = spec.dims.n_nodes
    m = spec.num_edges
    if m < 0:
        raise InfeasibleSpecError("num_edges must be nonnegative")
    if m > n * (n - 1) // 2:
        raise InfeasibleSpecError(f"{m} edges do not fit in {n} nodes")
    cap = spec.max_degree
    if cap is not None and cap < 1 and m > 0:
        raise InfeasibleSpecError("max_degree below 1 admits no edges")
    if spec.kind == "chain":
        if m + 1 > n and m > 0:
            raise InfeasibleSpecError(f"a chain of {m} edges needs {m + 1} nodes, have {n}")
        if cap is not None and cap < 2 and m > 1:
            raise InfeasibleSpecError("a chain with 2+ edges has degree-2 nodes")
    if spec.kind == "er" and cap is not None and m > n * cap // 2:
        raise InfeasibleSpecError(
            f"{m} edges violate the degree-sum bound for cap {cap} on {n} nodes"
        )
    if spec.kind == "hub":
        hd = spec.hub_degree
        if hd is None:
            raise InfeasibleSpecError("hub graphs need hub_degree")
        if hd > n - 1:
            raise InfeasibleSpecError(f"hub degree {hd} exceeds {n - 1} neighbors")
        if m < hd:
            raise InfeasibleSpecError("num_edges must cover the hub edges")
        rest = m - hd
        if rest > (n - 1) * (n - 2) // 2:
            raise InfeasibleSpecError("too many non-hub edges requested")
        if cap is not None and rest > (n - 1) * cap // 2:
            raise InfeasibleSpecError("non-hub edges violate the degree-sum bound")
    return n


def _pair_table(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u, v = np.triu_indices(len(nodes), k=1)
    return nodes[u], nodes[v]


def _has_triangle(n: int, us: np.ndarray, vs: np.ndarray) -> bool:
    adj = np.zeros((n, n), dtype=bool)
    adj[us, vs] = True
    adj[vs, us] = True
    paths2 = (adj.astype(np.int32) @ adj.astype(np.int32)) > 0
    return bool(np.any(paths2 & adj))


def gen_graph(spec: GraphSpec, max_attempts: int = 10_000) -> MarkovGraph:
    """Draw a graph per the spec. Whole-graph rejection enforces the degree
    cap and the optional triangle-free screen; the attempt budget guards
    against infeasible-in-practice configurations."""
    n = _validate(spec)
    rng = np.random.default_rng(spec.seed)

    if spec.kind == "chain":
        # a path has no triangles, so the screen never rejects here
        edges = frozenset((i, i + 1) for i in range(spec.num_edges))
        return MarkovGraph(dims=spec.dims, edges=edges)

    if spec.kind == "er":
        all_u, all_v = _pair_table(np.arange(n))
        n_pairs = all_u.size
        m = spec.num_edges
        if m == 0:
            return MarkovGraph(dims=spec.dims, edges=frozenset())
        # Candidate subsets are drawn in vectorized batches: pairs sampled
        # with replacement and rows containing a duplicate discarded, which
        # conditioned on distinctness is the uniform subset distribution.
        # Only distinct-pair rows count as attempts, so the budget keeps its
        # meaning of "candidate graphs examined". Tight degree caps can push
        # acceptance below 1e-5, hence the batching.
        batch = 64
        spent = 0
        while spent < max_attempts:
            cand = rng.integers(0, n_pairs, size=(batch, m))
            batch = min(8 * batch, 8192)
            cand.sort(axis=1)
            distinct = np.flatnonzero(np.all(np.diff(cand, axis=1) > 0, axis=1))
            if distinct.size > max_attempts - spent:
                distinct = distinct[: max_attempts - spent]
            spent += distinct.size
            sub = cand[distinct]
            if spec.max_degree is not None and sub.size:
                ends = np.concatenate([all_u[sub], all_v[sub]], axis=1)
                offs = np.arange(sub.shape[0])[:, None] * n
                deg = np.bincount((ends + offs).ravel(),
                                  minlength=sub.shape[0] * n).reshape(-1, n)
                sub = sub[deg.max(axis=1) <= spec.max_degree]
            for row in sub:
                us, vs = all_u[row], all_v[row]
                if spec.triangle_free and _has_triangle(n, us, vs):
                    continue
                return MarkovGraph(
                    dims=spec.dims, edges=frozenset(zip(us.tolist(), vs.tolist()))
                )
        raise BudgetExhaustedError(
            f"no admissible graph in {max_attempts} attempts; "
            "raise max_attempts or relax the spec"
        )

    # hub
    rest_nodes = np.arange(1, n)
    rest_u, rest_v = _pair_table(rest_nodes)
    n_rest_pairs = rest_u.size
    n_rest_edges = spec.num_edges - spec.hub_degree
    for _ in range(max_attempts):
        nbrs = rng.choice(rest_nodes, size=spec.hub_degree, replace=False)
        chosen = rng.choice(n_rest_pairs, size=n_rest_edges, replace=False)
        us = np.concatenate([np.zeros(spec.hub_degree, dtype=np.int64), rest_u[chosen]])
        vs = np.concatenate([nbrs, rest_v[chosen]])
        deg = np.bincount(np.concatenate([us, vs]), minlength=n)
        if spec.max_degree is not None and deg[1:].max(initial=0) > spec.max_degree:
            continue
        if spec.triangle_free and _has_triangle(n, us, vs):
            continue
        return MarkovGraph(dims=spec.dims, edges=frozenset(zip(us.tolist(), vs.tolist())))
    raise BudgetExhaustedError(
        f"no admissible hub graph in {max_attempts} attempts; "
        "raise max_attempts or relax the spec"
    )


def complete_block_graph(dims: MixedDims, block: int) -> MarkovGraph:
    """Graph whose first ``block`` nodes are completely connected and whose
    remaining nodes are isolated."""
    if block > dims.n_nodes:
        raise InfeasibleSpecError("block exceeds the node count")
    edges = frozenset((u, v) for u in range(block) for v in range(u + 1, block))
    return MarkovGraph(dims=dims, edges=edges)


@dataclass(frozen=True)
class ParamGenSpec:
    """Magnitudes for ground-truth parameters.

    main_value: magnitude of lambda_j, lambda_jk and eta_j entries.
    phi_value: magnitude of off-diagonal phi0 / phi_j entries.
    scale: global multiplier applied to both magnitudes.
    interactions: when False, every phi_j is left at zero (main effects
        only) even where the graph would allow interaction terms.
    seed: seed for the sign draws.
    """

    main_value: float = 1.0
    phi_value: float = 2.0
    scale: float = 1.0
    interactions: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.main_value <= 0 or self.phi_value <= 0 or self.scale <= 0:
            raise ValidationError("magnitudes must be positive")


def gen_params(graph: MarkovGraph, spec: ParamGenSpec, max_q: int = 20) -> CGParams:
    """Fill parameters for a graph and normalize them.

    Every coordinate whose edge group touches an absent edge is exactly 0.
    Coordinates allowed by the graph get random signs with the spec's
    magnitudes; lambda_j main effects are filled for every binary node.
    """
    dims = graph.dims
    q, p = dims.q, dims.p
    rng = np.random.default_rng(spec.seed)
    main = spec.main_value * spec.scale
    phiv = spec.phi_value * spec.scale

    def sign() -> float:
        return float(rng.integers(0, 2) * 2 - 1)

    lam = np.array([sign() * main for _ in range(q)])
    lam_pair = np.zeros((q, q))
    eta0 = np.zeros(p)
    eta = np.zeros((q, p))
    phi0 = np.zeros((p, p))
    phi = np.zeros((q, p, p))

    for u, v in sorted(graph.edges):
        if v < q:
            val = sign() * main
            lam_pair[u, v] = lam_pair[v, u] = val
        elif u < q:
            eta[u, v - q] = sign() * main
        else:
            g, m = u - q, v - q
            val = sign() * phiv
            phi0[g, m] = phi0[m, g] = val

    if spec.interactions:
        for j in range(q):
            for g in range(p):
                for m in range(g + 1, p):
                    complete = (
                        graph.has_edge(j, q + g)
                        and graph.has_edge(j, q + m)
                        and graph.has_edge(q + g, q + m)
                    )
                    if complete:
                        val = sign() * phiv
                        phi[j, g, m] = phi[j, m, g] = val

    row = np.abs(phi0).sum(axis=1) + np.abs(phi).sum(axis=(0, 2))
    np.fill_diagonal(phi0, row + 0.1)

    params = CGParams(
        dims=dims,
        lambda0=0.0,
        lam=lam,
        lam_pair=lam_pair,
        eta0=eta0,
        eta=eta,
        phi0=phi0,
        phi=phi,
    )
    return normalize(params, max_q=max_q)


def sample(params: CGParams, n: int, seed=None, max_q: int = 20) -> MixedDataset:
    """Draw n exact samples.

    The stream is fixed: first the n cell draws against the enumerated P_z
    table, then an (n, p) block of standard normals transformed cell by
    cell, so a given seed yields a bit-identical dataset.
    """
    if n < 1:
        raise ValidationError("n must be positive")
    dims = params.dims
    q, p = dims.q, dims.p
    rng = np.random.default_rng(seed)

    log_probs = cell_log_probs(params, max_q=max_q)
    probs = np.exp(log_probs)
    total = probs.sum()
    if not np.isfinite(total) or abs(total - 1.0) > 1e-8:
        raise ValidationError(
            f"cell probabilities sum to {total:.6g}; normalize the params first"
        )
    probs = probs / total

    zmat = cells(q)
    cell_idx = rng.choice(len(probs), size=n, p=probs)
    z = zmat[cell_idx].astype(np.int64)

    y = np.zeros((n, p))
    if p:
        u = rng.standard_normal((n, p))
        for c in np.unique(cell_idx):
            rows = np.nonzero(cell_idx == c)[0]
            tri = canonical_at(params, zmat[c])
            L = np.linalg.cholesky(tri.K)
            mean = np.linalg.solve(tri.K, tri.h)
            # K = L L' so solving L' x = u gives cov(x) = K^{-1}
            y[rows] = mean + np.linalg.solve(L.T, u[rows].T).T

    return MixedDataset(z=z, y=y, schema=default_schema(q, p))
