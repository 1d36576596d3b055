"""Command-line surface: simulate, fit, eval, stability, ingest.

One binary with subcommands.  Every flag can also be supplied through a
JSON config file (``--config``); keys are the flag names with dashes
replaced by underscores, and explicit flags win over config values.

Every output artifact gets a provenance sidecar ``<name>.prov`` (JSON)
holding the resolved configuration, the seeds and the package version;
re-running the recorded command reproduces the artifact bit for bit
(outputs carry no timestamps and all randomness is seed-derived).

Exit codes: 0 on success, 1 for usage or validation errors, 2 for
runtime or convergence failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .data import (
    drop_rare_binary,
    read_csv,
    read_schema,
    standardize_continuous,
    write_csv,
    write_schema,
)
from .errors import MixedGMError, ValidationError
from .evaluate import auc, roc, stability_select, write_roc_csv
from .model import MixedDims, graph_of, graph_to_json, params_from_json, params_to_json
from .neighborhood import estimate_from_json, fit_all
from .simulate import GraphSpec, ParamGenSpec, gen_graph, gen_params, sample

__all__ = ["main", "entry"]


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; remap to 1."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _spawn_seeds(seed, k):
    """Derive k independent integer seeds from one root seed."""
    children = np.random.SeedSequence(seed).spawn(k)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def _provenance(args, command):
    cfg = {
        key: val
        for key, val in sorted(vars(args).items())
        if key not in ("func", "command", "config")
    }
    return json.dumps(
        {"command": command, "config": cfg, "version": __version__},
        indent=2,
        sort_keys=True,
    ) + "\n"


def _sidecar(path, prov):
    # .prov, not .prov.json: sidecars must not match artifact globs like
    # estimate_*.json that downstream commands are fed
    with open(f"{path}.prov", "w") as fh:
        fh.write(prov)


def _write_text(path, text, prov):
    with open(path, "w") as fh:
        fh.write(text)
    _sidecar(path, prov)


def _node_names(schema):
    return [c.name for c in schema.discrete] + [c.name for c in schema.continuous]


def _load_colors(path):
    if path is None:
        return None
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in obj.items()
    ):
        raise ValidationError("colors file must map node names to color strings")
    return obj


def _read_dataset(args):
    schema = read_schema(args.schema)
    data = read_csv(args.data, schema)
    if data.n == 0:
        raise ValidationError(f"dataset {args.data!r} has no rows")
    return data


# -- subcommands --------------------------------------------------------------


def cmd_simulate(args):
    if args.n < 1:
        raise ValidationError("need n >= 1 rows")
    graph_seed, param_seed, sample_seed = _spawn_seeds(args.seed, 3)
    spec = GraphSpec(
        kind=args.kind,
        dims=MixedDims(q=args.q, p=args.p),
        num_edges=args.edges,
        max_degree=args.max_degree,
        hub_degree=args.hub_degree,
        triangle_free=args.triangle_free,
        seed=graph_seed,
    )
    graph = gen_graph(spec, max_attempts=args.max_attempts)
    params = gen_params(
        graph,
        ParamGenSpec(
            main_value=args.main_value,
            phi_value=args.phi_value,
            scale=args.scale,
            interactions=not args.no_interactions,
            seed=param_seed,
        ),
    )
    data = sample(params, args.n, seed=sample_seed)

    os.makedirs(args.out, exist_ok=True)
    prov = _provenance(args, "simulate")
    data_path = os.path.join(args.out, "data.csv")
    write_csv(data, data_path)
    _sidecar(data_path, prov)
    schema_path = os.path.join(args.out, "schema.json")
    write_schema(data.schema, schema_path)
    _sidecar(schema_path, prov)
    truth = {"params": params_to_json(params), "graph": graph_to_json(graph)}
    _write_text(
        os.path.join(args.out, "truth.json"),
        json.dumps(truth, indent=2, sort_keys=True) + "\n",
        prov,
    )
    print(f"wrote {args.out}/data.csv ({data.n} rows), schema.json, truth.json")


def cmd_fit(args):
    data = _read_dataset(args)
    colors = _load_colors(args.colors)
    estimates = fit_all(
        data,
        variant=args.penalty,
        num_rho=args.num_rho,
        min_ratio=args.min_ratio,
        standardize=not args.no_standardize,
        per_node_scaling=args.per_node_scaling,
        jobs=args.jobs,
    )
    os.makedirs(args.out, exist_ok=True)
    prov = _provenance(args, "fit")
    names = _node_names(data.schema)
    index = []
    for i, est in enumerate(estimates):
        stem = f"estimate_{i:03d}"
        _write_text(os.path.join(args.out, f"{stem}.json"), est.to_json() + "\n", prov)
        _write_text(
            os.path.join(args.out, f"{stem}.dot"),
            est.to_dot(names=names, colors=colors),
            prov,
        )
        index.append(
            {
                "rho": est.rho,
                "json": f"{stem}.json",
                "dot": f"{stem}.dot",
                "nEdges": len(est.edge_scores),
                "nNonconverged": est.n_nonconverged,
            }
        )
    summary = {
        "variant": args.penalty,
        "rhoGrid": [est.rho for est in estimates],
        "failures": list(estimates[0].failures) if estimates else [],
        "estimates": index,
    }
    _write_text(
        os.path.join(args.out, "path.json"),
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
        prov,
    )
    print(f"wrote {len(estimates)} estimates to {args.out}/ (path.json is the index)")


def cmd_eval(args):
    with open(args.truth) as fh:
        truth_obj = json.load(fh)
    params = params_from_json(truth_obj["params"])
    estimates = []
    for path in args.estimates:
        with open(path) as fh:
            text = fh.read()
        try:
            estimates.append(estimate_from_json(text))
        except (ValidationError, json.JSONDecodeError) as err:
            raise ValidationError(f"{path}: {err}") from err
    table = roc(params, estimates, graph=graph_of(params))
    os.makedirs(args.out, exist_ok=True)
    prov = _provenance(args, "eval")
    roc_path = os.path.join(args.out, "roc.csv")
    write_roc_csv(table, roc_path)
    _sidecar(roc_path, prov)
    summary = {
        "fprCap": args.fpr_cap,
        "aucEdge": auc(table, args.fpr_cap, level="edge"),
        "aucParameter": auc(table, args.fpr_cap, level="parameter"),
    }
    _write_text(
        os.path.join(args.out, "auc.json"),
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
        prov,
    )
    print(
        f"wrote {args.out}/roc.csv and auc.json "
        f"(edge AUC {summary['aucEdge']:.4f} at cap {args.fpr_cap})"
    )


def cmd_stability(args):
    data = _read_dataset(args)
    colors = _load_colors(args.colors)
    result = stability_select(
        data,
        rho=args.rho,
        n_subsamples=args.subsamples,
        threshold=args.threshold,
        seed=args.seed,
        variant=args.penalty,
        jobs=args.jobs,
    )
    os.makedirs(args.out, exist_ok=True)
    prov = _provenance(args, "stability")
    _write_text(os.path.join(args.out, "stability.json"), result.to_json() + "\n", prov)
    _write_text(
        os.path.join(args.out, "kept.dot"),
        result.to_dot(names=_node_names(data.schema), colors=colors),
        prov,
    )
    print(
        f"wrote {args.out}/stability.json and kept.dot "
        f"({len(result.kept_edges)} edges kept, {result.n_failures} failed subsamples)"
    )


def cmd_ingest(args):
    schema = read_schema(args.schema)
    data = read_csv(args.data, schema)
    if args.drop_rare_labels is not None:
        data = drop_rare_binary(data, args.drop_rare_labels)
    if args.standardize:
        data = standardize_continuous(data)
    os.makedirs(args.out, exist_ok=True)
    prov = _provenance(args, "ingest")
    data_path = os.path.join(args.out, "clean.csv")
    write_csv(data, data_path)
    _sidecar(data_path, prov)
    schema_path = os.path.join(args.out, "clean_schema.json")
    write_schema(data.schema, schema_path)
    _sidecar(schema_path, prov)
    print(f"wrote {args.out}/clean.csv ({data.n} rows, {len(data.schema.columns)} columns)")


# -- parser -------------------------------------------------------------------


def _build_parser():
    parser = _Parser(prog="mixedgm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mixedgm {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    subparsers = {}

    def new(name, help_text, func):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file of flag defaults; explicit flags win")
        p.set_defaults(func=func)
        subparsers[name] = p
        return p

    p = new("simulate", "sample a synthetic dataset from a generated model", cmd_simulate)
    p.add_argument("--kind", required=True, choices=("chain", "er", "hub"))
    p.add_argument("--q", required=True, type=int, help="number of binary variables")
    p.add_argument("--p", required=True, type=int, help="number of continuous variables")
    p.add_argument("--edges", required=True, type=int, help="exact edge count")
    p.add_argument("--n", required=True, type=int, help="number of rows to sample")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-degree", type=int, default=None)
    p.add_argument("--hub-degree", type=int, default=None)
    p.add_argument("--triangle-free", action="store_true")
    p.add_argument("--max-attempts", type=int, default=10_000)
    p.add_argument("--main-value", type=float, default=1.0,
                   help="magnitude of lambda and eta entries")
    p.add_argument("--phi-value", type=float, default=2.0,
                   help="magnitude of interaction entries")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--no-interactions", action="store_true",
                   help="leave every phi_j at zero")
    p.add_argument("--out", default=".", help="output directory")

    p = new("fit", "fit node-wise regressions along a penalty grid", cmd_fit)
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--schema", required=True, help="schema JSON")
    p.add_argument("--penalty", default="weighted",
                   choices=("weighted", "regular", "simple"))
    p.add_argument("--num-rho", type=int, default=50)
    p.add_argument("--min-ratio", type=float, default=0.01)
    p.add_argument("--no-standardize", action="store_true",
                   help="fit continuous columns on their raw scale")
    p.add_argument("--per-node-scaling", action="store_true",
                   help="rescale the grid per node by its own rho_max")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--colors", default=None,
                   help="JSON node-name to fill-color map for DOT output")
    p.add_argument("--out", default=".", help="output directory")

    p = new("eval", "score estimates against a known truth", cmd_eval)
    p.add_argument("--truth", required=True, help="truth JSON from simulate")
    p.add_argument("--estimates", required=True, nargs="+",
                   help="estimate JSON files from fit")
    p.add_argument("--fpr-cap", type=float, default=0.25)
    p.add_argument("--out", default=".", help="output directory")

    p = new("stability", "stability selection on half subsamples", cmd_stability)
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--schema", required=True, help="schema JSON")
    p.add_argument("--rho", required=True, type=float)
    p.add_argument("--subsamples", type=int, default=100)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--penalty", default="weighted",
                   choices=("weighted", "regular", "simple"))
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--colors", default=None,
                   help="JSON node-name to fill-color map for DOT output")
    p.add_argument("--out", default=".", help="output directory")

    p = new("ingest", "validate and transform a mixed CSV", cmd_ingest)
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--schema", required=True, help="schema JSON")
    p.add_argument("--drop-rare-labels", type=float, nargs="?", const=0.03,
                   default=None,
                   help="drop binary columns rarer than this fraction "
                        "(default 0.03 when given without a value)")
    p.add_argument("--standardize", action="store_true",
                   help="center and scale continuous columns")
    p.add_argument("--out", default=".", help="output directory")

    return parser, subparsers


def _scan_config(argv):
    """Locate a --config value without a full parse, which would reject a
    command line whose required flags live in the config file."""
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser, subparsers, argv):
    argv = list(sys.argv[1:] if argv is None else argv)
    path = _scan_config(argv)
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    sub = subparsers.get(command)
    if path and sub is not None:
        with open(path) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ValidationError("config file must hold a JSON object")
        dests = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - dests)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**cfg)
        for action in sub._actions:
            if action.required and action.dest in cfg:
                action.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser, subparsers = _build_parser()
    try:
        args = _apply_config(parser, subparsers, argv)
        args.func(args)
        return 0
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except MixedGMError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - runtime failures map to exit 2
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
