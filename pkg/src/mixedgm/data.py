"""Mixed datasets: column schema, in-memory representation, CSV and JSON I/O.

A dataset holds n rows of q discrete columns (binary 0/1, or categorical
with integer levels 1..K) and p continuous columns. On disk it is a plain
CSV with a header row plus a JSON schema file describing each column.
Missing values are rejected at ingestion; there is no imputation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, SchemaError, ValidationError
from .model import MixedDims

__all__ = [
    "ColumnSpec",
    "ColumnSchema",
    "MixedDataset",
    "default_schema",
    "write_csv",
    "read_csv",
    "write_schema",
    "read_schema",
    "drop_rare_binary",
    "standardize_continuous",
    "ingest",
]

_KINDS = ("binary", "categorical", "continuous")


@dataclass(frozen=True)
class ColumnSpec:
    """One column: its name, kind, and level count K for categorical."""

    name: str
    kind: str
    levels: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SchemaError(f"unknown column kind {self.kind!r}")
        if self.kind == "categorical":
            if self.levels is None or int(self.levels) < 2:
                raise SchemaError("categorical columns need levels >= 2")
            object.__setattr__(self, "levels", int(self.levels))
        elif self.levels is not None:
            raise SchemaError(f"{self.kind} columns must not declare levels")


@dataclass(frozen=True)
class ColumnSchema:
    """Ordered column specs. Discrete columns keep their relative order and
    map to the z block; continuous columns map to the y block."""

    columns: tuple[ColumnSpec, ...]

    def __post_init__(self):
        cols = tuple(self.columns)
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        object.__setattr__(self, "columns", cols)

    @property
    def discrete(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if c.kind != "continuous")

    @property
    def continuous(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if c.kind == "continuous")

    @property
    def q(self) -> int:
        return len(self.discrete)

    @property
    def p(self) -> int:
        return len(self.continuous)

    def dims(self) -> MixedDims:
        levels = tuple(2 if c.kind == "binary" else c.levels for c in self.discrete)
        return MixedDims(q=self.q, p=self.p, levels=levels)

    def to_json(self) -> dict:
        cols = []
        for c in self.columns:
            item = {"name": c.name, "kind": c.kind}
            if c.kind == "categorical":
                item["levels"] = c.levels
            cols.append(item)
        return {"columns": cols}

    @staticmethod
    def from_json(obj: dict) -> "ColumnSchema":
        cols = tuple(
            ColumnSpec(name=c["name"], kind=c["kind"], levels=c.get("levels"))
            for c in obj["columns"]
        )
        return ColumnSchema(columns=cols)


def default_schema(q: int, p: int) -> ColumnSchema:
    cols = [ColumnSpec(name=f"z{j + 1}", kind="binary") for j in range(q)]
    cols += [ColumnSpec(name=f"y{g + 1}", kind="continuous") for g in range(p)]
    return ColumnSchema(columns=tuple(cols))


@dataclass(frozen=True, eq=False)
class MixedDataset:
    """n observations of the discrete block z (n, q) and continuous block
    y (n, p), with a schema naming the columns.

    Binary columns hold 0/1; categorical columns hold integer levels 1..K.
    """

    z: np.ndarray
    y: np.ndarray
    schema: ColumnSchema

    def __post_init__(self):
        z = np.array(self.z, dtype=np.int64)
        y = np.array(self.y, dtype=float)
        if z.ndim != 2 or y.ndim != 2:
            raise DimensionError("z and y must be 2d arrays")
        if z.shape[0] != y.shape[0]:
            raise DimensionError("z and y must have the same number of rows")
        if z.shape[1] != self.schema.q or y.shape[1] != self.schema.p:
            raise DimensionError("data shapes do not match the schema")
        if not np.all(np.isfinite(y)):
            raise ValidationError("continuous data must be finite")
        for col, spec in enumerate(self.schema.discrete):
            vals = z[:, col]
            if spec.kind == "binary":
                if vals.size and not np.isin(vals, (0, 1)).all():
                    raise ValidationError(f"column {spec.name!r} must be 0/1")
            else:
                if vals.size and (vals.min() < 1 or vals.max() > spec.levels):
                    raise ValidationError(
                        f"column {spec.name!r} must take levels 1..{spec.levels}"
                    )
        z.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    def dims(self) -> MixedDims:
        return self.schema.dims()

    def equals(self, other: "MixedDataset") -> bool:
        return (
            self.schema == other.schema
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.y, other.y)
        )


def write_csv(dataset: MixedDataset, path) -> None:
    """Write the dataset as CSV: header row, discrete columns first.

    Continuous values are written with repr precision so that reading the
    file back reproduces the exact float64 values.
    """
    names = [c.name for c in dataset.schema.discrete]
    names += [c.name for c in dataset.schema.continuous]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(dataset.n):
            row = [str(int(v)) for v in dataset.z[i]]
            row += [repr(float(v)) for v in dataset.y[i]]
            writer.writerow(row)


def write_schema(schema: ColumnSchema, path) -> None:
    with open(path, "w") as fh:
        json.dump(schema.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_schema(path) -> ColumnSchema:
    with open(path) as fh:
        return ColumnSchema.from_json(json.load(fh))


def _parse_cell(text: str, spec: ColumnSpec, row: int) -> float:
    if text == "":
        raise SchemaError(
            f"missing value at row {row}, column {spec.name!r}; "
            "missing data is not supported"
        )
    try:
        if spec.kind == "continuous":
            val = float(text)
            if not np.isfinite(val):
                raise ValueError
            return val
        val = int(text)
    except ValueError:
        raise SchemaError(
            f"cannot parse {text!r} at row {row}, column {spec.name!r} "
            f"as {spec.kind}"
        ) from None
    if spec.kind == "binary" and val not in (0, 1):
        raise SchemaError(f"row {row}, column {spec.name!r}: binary values are 0/1")
    if spec.kind == "categorical" and not 1 <= val <= spec.levels:
        raise SchemaError(
            f"row {row}, column {spec.name!r}: levels run 1..{spec.levels}"
        )
    return val


def read_csv(path, schema: ColumnSchema) -> MixedDataset:
    """Read a CSV against a schema. The header must list exactly the schema's
    column names; column order in the file may differ from the schema."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("CSV file is empty; a header row is required") from None
        by_name = {c.name: c for c in schema.columns}
        if sorted(header) != sorted(by_name):
            raise SchemaError(
                "CSV header does not match the schema: "
                f"file has {header}, schema has {sorted(by_name)}"
            )
        specs = [by_name[name] for name in header]
        rows = []
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise SchemaError(f"row {rownum} has {len(row)} fields, expected {len(header)}")
            rows.append([_parse_cell(cell, spec, rownum) for cell, spec in zip(row, specs)])
    if not rows:
        raise SchemaError("CSV file contains a header but no data rows")
    table = {name: idx for idx, name in enumerate(header)}
    data = np.asarray(rows, dtype=float)
    z = np.stack(
        [data[:, table[c.name]] for c in schema.discrete], axis=1
    ) if schema.q else np.zeros((data.shape[0], 0))
    y = np.stack(
        [data[:, table[c.name]] for c in schema.continuous], axis=1
    ) if schema.p else np.zeros((data.shape[0], 0))
    return MixedDataset(z=z, y=y, schema=schema)


def drop_rare_binary(dataset: MixedDataset, threshold: float) -> MixedDataset:
    """Drop binary columns whose label (value 1) occurs in fewer than
    ``threshold`` of the rows."""
    if not 0 < threshold < 1:
        raise ValidationError("threshold must lie in (0, 1)")
    keep = []
    for col, spec in enumerate(dataset.schema.discrete):
        if spec.kind == "binary" and dataset.z[:, col].mean() < threshold:
            continue
        keep.append(col)
    specs = tuple(dataset.schema.discrete[c] for c in keep) + dataset.schema.continuous
    return MixedDataset(
        z=dataset.z[:, keep], y=dataset.y, schema=ColumnSchema(columns=specs)
    )


def standardize_continuous(dataset: MixedDataset) -> MixedDataset:
    """Center and scale every continuous column to mean 0 and unit variance
    (population convention, denominator n). Constant columns are centered
    only."""
    if dataset.schema.p == 0:
        return dataset
    m = dataset.y.mean(axis=0)
    s = dataset.y.std(axis=0)
    s = np.where(s == 0.0, 1.0, s)
    return replace(dataset, y=(dataset.y - m) / s)


def ingest(
    csv_path,
    schema_path,
    drop_rare_labels: float | None = None,
    standardize: bool = False,
) -> MixedDataset:
    """Load a mixed CSV file against its JSON schema.

    ``drop_rare_labels`` optionally removes binary columns assigned in fewer
    than the given fraction of rows (a common preparation step for sparse
    label data; 0.03 is the conventional cutoff). ``standardize`` centers
    and scales the continuous columns. Both transforms default to off so
    that ingest(write(dataset)) reproduces the dataset exactly.
    """
    schema = read_schema(schema_path)
    dataset = read_csv(csv_path, schema)
    if drop_rare_labels is not None:
        dataset = drop_rare_binary(dataset, drop_rare_labels)
    if standardize:
        dataset = standardize_continuous(dataset)
    return dataset
