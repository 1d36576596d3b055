"""Dataset I/O and preparation: CSV round-trips, schema checks, filters."""

import numpy as np
import pytest

from mixedgm import (
    ColumnSchema,
    ColumnSpec,
    MixedDataset,
    SchemaError,
    ValidationError,
    default_schema,
    drop_rare_binary,
    ingest,
    read_csv,
    read_schema,
    standardize_continuous,
    write_csv,
    write_schema,
)


def make_dataset(n=40, seed=0):
    rng = np.random.default_rng(seed)
    schema = default_schema(q=2, p=3)
    z = rng.integers(0, 2, (n, 2))
    y = rng.standard_normal((n, 3)) * np.array([1.0, 3.0, 0.2])
    return MixedDataset(z=z, y=y, schema=schema)


def test_csv_round_trip_exact(tmp_path):
    data = make_dataset()
    path = tmp_path / "data.csv"
    write_csv(data, path)
    back = read_csv(path, data.schema)
    assert back.equals(data)


def test_csv_column_order_may_differ(tmp_path):
    data = make_dataset(n=3, seed=1)
    path = tmp_path / "permuted.csv"
    rows = ["y2,z1,y1,z2,y3"]
    for i in range(3):
        rows.append(
            f"{float(data.y[i, 1])!r},{data.z[i, 0]},{float(data.y[i, 0])!r},"
            f"{data.z[i, 1]},{float(data.y[i, 2])!r}"
        )
    path.write_text("\n".join(rows) + "\n")
    back = read_csv(path, data.schema)
    assert back.equals(data)


def test_csv_header_mismatch_rejected(tmp_path):
    data = make_dataset(n=2)
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c,d,e\n0,0,1.0,2.0,3.0\n")
    with pytest.raises(SchemaError):
        read_csv(path, data.schema)


def test_csv_rejects_bad_values(tmp_path):
    schema = default_schema(q=1, p=1)
    path = tmp_path / "bad.csv"
    path.write_text("z1,y1\n2,0.5\n")
    with pytest.raises(SchemaError):
        read_csv(path, schema)
    path.write_text("z1,y1\n1,\n")
    with pytest.raises(SchemaError):
        read_csv(path, schema)
    path.write_text("z1,y1\n")
    with pytest.raises(SchemaError):
        read_csv(path, schema)


def test_categorical_levels_enforced(tmp_path):
    schema = ColumnSchema(
        columns=(
            ColumnSpec(name="c1", kind="categorical", levels=4),
            ColumnSpec(name="y1", kind="continuous"),
        )
    )
    path = tmp_path / "cat.csv"
    path.write_text("c1,y1\n1,0.1\n4,0.2\n")
    data = read_csv(path, schema)
    assert data.z[:, 0].tolist() == [1, 4]
    assert data.dims().levels == (4,)
    path.write_text("c1,y1\n5,0.1\n")
    with pytest.raises(SchemaError):
        read_csv(path, schema)
    path.write_text("c1,y1\n0,0.1\n")
    with pytest.raises(SchemaError):
        read_csv(path, schema)


def test_schema_json_round_trip(tmp_path):
    schema = ColumnSchema(
        columns=(
            ColumnSpec(name="tag", kind="binary"),
            ColumnSpec(name="genre", kind="categorical", levels=3),
            ColumnSpec(name="tempo", kind="continuous"),
        )
    )
    path = tmp_path / "schema.json"
    write_schema(schema, path)
    assert read_schema(path) == schema


def test_schema_validation():
    with pytest.raises(SchemaError):
        ColumnSpec(name="x", kind="categorical")
    with pytest.raises(SchemaError):
        ColumnSpec(name="x", kind="binary", levels=2)
    with pytest.raises(SchemaError):
        ColumnSchema(
            columns=(
                ColumnSpec(name="x", kind="binary"),
                ColumnSpec(name="x", kind="continuous"),
            )
        )


def test_drop_rare_binary():
    schema = default_schema(q=3, p=1)
    z = np.zeros((100, 3), dtype=int)
    z[:2, 0] = 1   # 2 percent, below a 3 percent cutoff
    z[:50, 1] = 1
    z[:97, 2] = 1  # common label, kept even though its complement is rare
    data = MixedDataset(z=z, y=np.ones((100, 1)), schema=schema)
    filtered = drop_rare_binary(data, threshold=0.03)
    assert [c.name for c in filtered.schema.discrete] == ["z2", "z3"]
    assert filtered.z.shape == (100, 2)
    np.testing.assert_array_equal(filtered.y, data.y)
    with pytest.raises(ValidationError):
        drop_rare_binary(data, threshold=1.5)


def test_standardize_continuous_population_convention():
    data = make_dataset(n=50, seed=2)
    out = standardize_continuous(data)
    np.testing.assert_allclose(out.y.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.y.std(axis=0), 1.0, atol=1e-12)
    np.testing.assert_array_equal(out.z, data.z)
    # constant columns are centered, not scaled
    const = MixedDataset(
        z=data.z, y=np.full((50, 3), 7.0), schema=data.schema
    )
    out = standardize_continuous(const)
    np.testing.assert_array_equal(out.y, np.zeros((50, 3)))


def test_ingest_round_trip_and_flags(tmp_path):
    data = make_dataset(n=60, seed=3)
    csv_path = tmp_path / "data.csv"
    schema_path = tmp_path / "schema.json"
    write_csv(data, csv_path)
    write_schema(data.schema, schema_path)
    back = ingest(csv_path, schema_path)
    assert back.equals(data)
    std = ingest(csv_path, schema_path, standardize=True)
    np.testing.assert_allclose(std.y.mean(axis=0), 0.0, atol=1e-12)
    rare = ingest(csv_path, schema_path, drop_rare_labels=0.99)
    assert rare.schema.q < data.schema.q


def test_binary_values_validated_at_construction():
    schema = default_schema(q=1, p=0)
    with pytest.raises(ValidationError):
        MixedDataset(z=np.array([[2]]), y=np.zeros((1, 0)), schema=schema)
