"""ROC tables, capped AUC, CSV round-trips, and stability selection."""

import json

import numpy as np
import pytest

from mixedgm import (
    CGParams,
    GraphEstimate,
    GraphSpec,
    MarkovGraph,
    MixedDataset,
    MixedDims,
    ParamGenSpec,
    RocRow,
    RocTable,
    ValidationError,
    auc,
    average_roc,
    default_schema,
    gen_graph,
    gen_params,
    graph_of,
    normalize,
    read_roc_csv,
    roc,
    sample,
    stability_select,
    write_roc_csv,
)
from mixedgm.model import coord_value


def chain_truth(q=2, p=3, seed=0):
    graph = gen_graph(GraphSpec(kind="chain", dims=MixedDims(q=q, p=p),
                                num_edges=4, seed=seed))
    params = gen_params(graph, ParamGenSpec(seed=seed + 100))
    return graph, params


def as_estimate(params, rho=0.1):
    scores = {e: 1.0 for e in graph_of(params).edges}
    return GraphEstimate(params=params, edge_scores=scores, rho=rho,
                         variant="weighted")


def test_roc_perfect_estimate():
    graph, params = chain_truth()
    table = roc(params, as_estimate(params))
    assert len(table.rows) == 2
    for row in table.rows:
        assert row.tpr == 1.0 and row.fpr == 0.0
    assert [r.level for r in table.rows] == ["parameter", "edge"]


def test_roc_zero_estimate():
    graph, params = chain_truth()
    empty = MarkovGraph(dims=params.dims, edges=frozenset())
    zero = gen_params(empty, ParamGenSpec(seed=1))
    table = roc(params, as_estimate(zero))
    for row in table.rows:
        assert row.tp == 0 and row.fp == 0
        assert row.tpr == 0.0 and row.fpr == 0.0


def test_roc_brute_force_oracle():
    dims = MixedDims(q=2, p=3)
    truth_g = gen_graph(GraphSpec(kind="er", dims=dims, num_edges=4, seed=2))
    est_g = gen_graph(GraphSpec(kind="er", dims=dims, num_edges=4, seed=3))
    truth = gen_params(truth_g, ParamGenSpec(seed=4))
    est_p = gen_params(est_g, ParamGenSpec(seed=5))
    est = as_estimate(est_p, rho=0.7)
    (prow, erow) = roc(truth, est).rows

    coords = (
        [("lambdaPair", 0, 1)]
        + [("eta", j, g) for j in range(2) for g in range(3)]
        + [("phi0", g, m) for g in range(3) for m in range(g + 1, 3)]
        + [("phi", j, g, m) for j in range(2) for g in range(3)
           for m in range(g + 1, 3)]
    )
    t_on = {c for c in coords if coord_value(truth, c) != 0.0}
    e_on = {c for c in coords if coord_value(est_p, c) != 0.0}
    tp, fp = len(t_on & e_on), len(e_on - t_on)
    assert (prow.tp, prow.fp) == (tp, fp)
    assert prow.tpr == pytest.approx(tp / len(t_on))
    assert prow.fpr == pytest.approx(fp / (len(coords) - len(t_on)))

    tp_e = len(est_g.edges & truth_g.edges)
    fp_e = len(est_g.edges - truth_g.edges)
    assert (erow.tp, erow.fp) == (tp_e, fp_e)
    assert erow.tpr == pytest.approx(tp_e / 4)
    assert erow.fpr == pytest.approx(fp_e / (10 - 4))


def test_roc_universe_excludes_intercepts():
    # against an empty truth everything selected is a false positive, and
    # the denominators reveal the coordinate/pair universes exactly
    dims = MixedDims(q=2, p=3)
    empty = MarkovGraph(dims=dims, edges=frozenset())
    truth = gen_params(empty, ParamGenSpec(seed=6))
    dense_g = MarkovGraph(
        dims=dims,
        edges=frozenset((u, v) for u in range(5) for v in range(u + 1, 5)),
    )
    dense = gen_params(dense_g, ParamGenSpec(seed=7))
    (prow, erow) = roc(truth, as_estimate(dense)).rows
    assert erow.fp == 10 and erow.fpr == 1.0
    # 1 lambda_jk + 6 eta + 3 phi0: phi_j duplicates stay zero here because
    # the generator only fills complete-subgraph interactions
    assert prow.fpr == prow.fp / 16


def test_roc_adding_true_edge_improves():
    graph, params = chain_truth()
    some = sorted(graph.edges)[:2]
    sub_g = MarkovGraph(dims=params.dims, edges=frozenset(some))
    sup_g = MarkovGraph(dims=params.dims, edges=frozenset(sorted(graph.edges)[:3]))
    sub = roc(params, as_estimate(gen_params(sub_g, ParamGenSpec(seed=8)))).rows[1]
    sup = roc(params, as_estimate(gen_params(sup_g, ParamGenSpec(seed=8)))).rows[1]
    assert sup.tp == sub.tp + 1 and sup.fp == sub.fp


def test_roc_validation_and_graph_override():
    graph, params = chain_truth()
    other = MixedDims(q=1, p=2)
    bad = gen_params(MarkovGraph(dims=other, edges=frozenset()),
                     ParamGenSpec(seed=9))
    with pytest.raises(ValidationError):
        roc(params, as_estimate(bad))
    with pytest.raises(ValidationError):
        roc(params, [])
    # override: declare a different edge truth without touching parameters
    override = MarkovGraph(dims=params.dims, edges=frozenset([(0, 1)]))
    row = roc(params, as_estimate(params), graph=override).rows[1]
    assert row.fp == len(graph.edges) - int((0, 1) in graph.edges)


def table_from_points(points, level="edge"):
    rows = []
    for i, (f, t) in enumerate(points):
        rows.append(RocRow(rho=1.0 / (i + 1), level=level, tp=t * 10,
                           fp=f * 10, tpr=t, fpr=f))
    return RocTable(rows=tuple(rows))


def test_auc_perfect_and_diagonal():
    perfect = table_from_points([(0.0, 1.0), (1.0, 1.0)])
    assert auc(perfect, 1.0) == pytest.approx(1.0)
    assert auc(perfect, 0.25) == pytest.approx(1.0)
    diag = table_from_points([(x, x) for x in np.linspace(0, 1, 21)])
    assert auc(diag, 1.0) == pytest.approx(0.5)
    assert auc(diag, 0.25) == pytest.approx(0.125)


def test_auc_tie_keeps_best_and_interpolates():
    table = table_from_points([(0.1, 0.2), (0.1, 0.6), (0.5, 0.8)])
    # at fpr 0.1 only the higher tpr counts; cap cuts inside (0.1, 0.5)
    val = auc(table, 0.3)
    # curve: (0,0) -> (0.1, 0.6) -> (0.3, 0.7)
    expect = (0.5 * 0.1 * 0.6 + 0.2 * 0.5 * (0.6 + 0.7)) / 0.3
    assert val == pytest.approx(expect)


def test_auc_extends_flat_to_cap():
    table = table_from_points([(0.1, 0.6)])
    expect = 0.5 * 0.1 * 0.6 + 0.9 * 0.6
    assert auc(table, 1.0) == pytest.approx(expect)


def test_auc_validation():
    table = table_from_points([(0.1, 0.6)])
    for cap in (0.0, -1.0, 1.5):
        with pytest.raises(ValidationError):
            auc(table, cap)
    with pytest.raises(ValidationError):
        auc(table, 0.5, level="parameter")  # no parameter rows present
    with pytest.raises(ValidationError):
        auc(table, 0.5, level="nodes")


def test_average_roc():
    t1 = table_from_points([(0.0, 0.2), (0.4, 0.8)])
    t2 = table_from_points([(0.2, 0.4), (0.6, 1.0)])
    avg = average_roc([t1, t2])
    assert [r.fpr for r in avg.rows] == [pytest.approx(0.1), pytest.approx(0.5)]
    assert [r.tpr for r in avg.rows] == [pytest.approx(0.3), pytest.approx(0.9)]
    t3 = table_from_points([(0.0, 0.2)])
    with pytest.raises(ValidationError):
        average_roc([t1, t3])
    with pytest.raises(ValidationError):
        average_roc([])


def test_roc_csv_round_trip(tmp_path):
    graph, params = chain_truth()
    table = roc(params, as_estimate(params, rho=0.37))
    path = tmp_path / "roc.csv"
    write_roc_csv(table, path)
    header = path.read_text().splitlines()[0]
    assert header == "rho,level,TP,FP,TPR,FPR"
    back = read_roc_csv(path)
    assert back.rows == table.rows


def test_roc_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("rho,level,tp,fp,tpr,fpr\n0.1,edge,1,0,1.0,0.0\n")
    with pytest.raises(ValidationError):
        read_roc_csv(path)


# -- stability selection ---------------------------------------------------


def strong_pair_data(n=600, seed=0):
    """One strong continuous edge; everything else is noise."""
    dims = MixedDims(q=1, p=2)
    phi0 = np.array([[2.1, 2.0], [2.0, 2.1]])
    params = normalize(CGParams(
        dims=dims, lambda0=0.0, lam=np.zeros(1), lam_pair=np.zeros((1, 1)),
        eta0=np.zeros(2), eta=np.zeros((1, 2)), phi0=phi0,
        phi=np.zeros((1, 2, 2)),
    ))
    return params, sample(params, n, seed=seed)


def test_stability_keeps_always_selected_edge():
    params, data = strong_pair_data()
    res = stability_select(data, rho=0.3, n_subsamples=20, threshold=1.0,
                           seed=42)
    assert res.kept_edges == frozenset([(1, 2)])
    assert res.edge_frequency[(1, 2)] == 1.0
    assert res.n_failures == 0


def test_stability_empty_graph_keeps_nothing():
    dims = MixedDims(q=2, p=2)
    empty = MarkovGraph(dims=dims, edges=frozenset())
    params = gen_params(empty, ParamGenSpec(seed=12))
    data = sample(params, 400, seed=13)
    res = stability_select(data, rho=0.4, n_subsamples=20, threshold=0.9,
                           seed=1)
    assert res.kept_edges == frozenset()
    assert all(f < 0.9 for f in res.edge_frequency.values())


def test_stability_reproducible():
    _, data = strong_pair_data(n=200, seed=3)
    a = stability_select(data, rho=0.3, n_subsamples=10, seed=7)
    b = stability_select(data, rho=0.3, n_subsamples=10, seed=7)
    assert a.edge_frequency == b.edge_frequency
    assert a.kept_edges == b.kept_edges


def test_stability_validation():
    _, data = strong_pair_data(n=100, seed=4)
    with pytest.raises(ValidationError):
        stability_select(data, rho=0.3, threshold=0.0)
    with pytest.raises(ValidationError):
        stability_select(data, rho=0.3, threshold=1.5)
    with pytest.raises(ValidationError):
        stability_select(data, rho=0.3, n_subsamples=0)
    with pytest.raises(ValidationError):
        stability_select(data, rho=-0.1)
    tiny = MixedDataset(z=data.z[:1], y=data.y[:1], schema=data.schema)
    with pytest.raises(ValidationError):
        stability_select(tiny, rho=0.3)


def test_stability_records_partial_failures():
    schema = default_schema(q=2, p=2)
    rng = np.random.default_rng(5)
    z = np.column_stack([np.ones(100, dtype=int), rng.integers(0, 2, 100)])
    y = rng.standard_normal((100, 2))
    data = MixedDataset(z=z, y=y, schema=schema)
    res = stability_select(data, rho=0.3, n_subsamples=5, seed=9)
    assert len(res.failures) == 5
    assert all("z0" in note for note in res.failures)
    assert res.n_failures == 0  # partial failures do not void the subsample


def test_stability_json_and_dot():
    _, data = strong_pair_data(n=200, seed=6)
    res = stability_select(data, rho=0.3, n_subsamples=10, seed=11)
    obj = json.loads(res.to_json())
    assert set(obj) == {"q", "p", "rho", "variant", "threshold", "nSubsamples",
                        "nFailures", "failures", "edgeFrequency", "keptEdges"}
    dot = res.to_dot()
    assert dot.startswith("graph G {") and "square" in dot
