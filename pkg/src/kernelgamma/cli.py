"""Command line interface: ``kernelgamma <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
``--input`` accepts a file path or ``builtin:<name>``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, dmm, kos, svm
from .bench import BenchConfig, DatasetConfig, accuracy, emit_report, run_benchmark
from .dataset import DataError, ScalingSpec, apply_scaling, fit_scaling, load, load_builtin
from .geometry import GeometryError, compute_geometry
from .kernel import KernelError
from .tuning import GridSpec, default_c_grid, default_gamma_grid, grid_search, thread_count

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
MODEL_FORMAT = "kernelgamma-model"
MODEL_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    try:
        return [float(_number(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated number list: {text!r}")


def _number(token: str) -> float:
    """Parse ``0.5``, ``1e-3`` or ``2^-5``."""
    token = token.strip()
    if "^" in token:
        base, exp = token.split("^", 1)
        return float(base) ** float(exp)
    return float(token)


def _scale_range(text: str):
    if text.lower() == "none":
        return None
    vals = _float_list(text)
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise argparse.ArgumentTypeError("scale range must be 'lo,hi' with lo < hi, or 'none'")
    return tuple(vals)


def _load_input(spec: str, fmt: str | None, label_column: int):
    if spec.startswith("builtin:"):
        return load_builtin(spec.split(":", 1)[1])
    return load(spec, fmt, label_column)


def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="dataset file or builtin:<name>")
    p.add_argument("--format", dest="fmt", choices=["libsvm", "csv"], default=None,
                   help="input format (default: from extension)")
    p.add_argument("--label-column", type=int, default=0, help="CSV label column")


def _add_scaling(p):
    p.add_argument("--scale-range", type=_scale_range, default=(0.0, 1.0),
                   help="min-max target range 'lo,hi' or 'none' (default 0,1)")


def _add_out(p):
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def _write(args, data) -> None:
    if isinstance(data, str):
        data = data.encode()
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())


def _scaled(ds, scale_range):
    if scale_range is None:
        return ds, None
    spec = fit_scaling(ds, scale_range)
    return apply_scaling(ds, spec), spec


def cmd_geometry(args) -> int:
    ds, _ = _scaled(_load_input(args.input, args.fmt, args.label_column), args.scale_range)
    geom = compute_geometry(ds, max_class_size=args.max_class_size)
    out = {"dataset": ds.name, "labels": list(ds.labels), **geom.to_dict()}
    _write(args, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_estimate(args) -> int:
    ds, _ = _scaled(_load_input(args.input, args.fmt, args.label_column), args.scale_range)
    geom = compute_geometry(ds, max_class_size=args.max_class_size)
    est = dmm.estimate(geom, args.gamma_variant)
    out = {"gamma": est.gamma, "sigma": est.sigma, "D_max": geom.d_max,
           "d_min": geom.d_min_interclass, "d_av": geom.d_av,
           "variant": est.variant.value}
    _write(args, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_train(args) -> int:
    raw = _load_input(args.input, args.fmt, args.label_column)
    ds, spec = _scaled(raw, args.scale_range)
    estimate = None
    gamma = args.gamma
    if gamma is None:
        estimate = dmm.estimate(compute_geometry(ds), args.gamma_variant)
        gamma = estimate.gamma
    if args.method == "svm":
        model = svm.train_multiclass(ds, gamma, args.C, args.tol or svm.DEFAULT_TOL)
    else:
        model = kos.fit(ds, gamma, args.tol or 1e-10,
                        imbalance_factor=args.imbalance_factor, seed=args.seed)
    payload = {"format": MODEL_FORMAT, "version": MODEL_VERSION, "method": args.method,
               "scaling": spec.to_dict() if spec else None,
               "dmm": estimate.to_dict() if estimate else None,
               "model": model.to_dict()}
    _write(args, json.dumps(payload) + "\n")
    return EXIT_OK


def _read_model(path):
    try:
        payload = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    if payload.get("format") != MODEL_FORMAT or payload.get("version") != MODEL_VERSION:
        raise DataError(f"{path}: not a kernelgamma model of a supported version")
    if payload["method"] == "svm":
        model = svm.SvmMulticlassModel.from_dict(payload["model"])
    else:
        model = kos.KosModel.from_dict(payload["model"])
    scaling = ScalingSpec.from_dict(payload["scaling"]) if payload["scaling"] else None
    return payload["method"], model, scaling


def cmd_predict(args) -> int:
    method, model, scaling = _read_model(args.model)
    ds = _load_input(args.input, args.fmt, args.label_column)
    X = scaling.transform(ds.X) if scaling else ds.X
    pred = model.predict(X)
    labels = list(model.labels)
    out = {"method": method, "predictions": [labels[p] if labels else int(p) for p in pred]}
    if labels and set(ds.labels) <= set(labels):
        truth = np.array([labels.index(ds.labels[c]) for c in ds.y])
        out["accuracy"] = accuracy(pred, truth)
    _write(args, json.dumps(out) + "\n")
    return EXIT_OK


def cmd_tune(args) -> int:
    ds = _load_input(args.input, args.fmt, args.label_column)
    spec = GridSpec(args.gamma_grid or default_gamma_grid(), args.c_grid or default_c_grid(),
                    args.folds, args.seed, args.scale_range)
    res = grid_search(ds, args.method, spec, workers=thread_count() if args.parallel else 1)
    out = res.to_dict()
    out["grid"] = spec.to_dict()
    _write(args, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.config:
        cfg = _config_from_file(args.config)
    else:
        if not args.input:
            raise UsageError("bench needs --input or --config")
        datasets = [DatasetConfig.from_spec(s, args.test_fraction, fmt=args.fmt,
                                            label_column=args.label_column)
                    for s in args.input]
        grid = GridSpec(args.gamma_grid or default_gamma_grid(),
                        args.c_grid or default_c_grid(), args.folds, 0, args.scale_range)
        cfg = BenchConfig(datasets, methods=args.method or ("svm", "kos"),
                          modes=args.mode or ("learning", "dmm"),
                          seeds=args.seed or (0,), grid=grid, scale_range=args.scale_range,
                          variant=args.gamma_variant,
                          imbalance_factor=args.imbalance_factor,
                          workers=thread_count() if args.parallel else 1)
    reports = run_benchmark(cfg)
    _write(args, emit_report(reports, args.report_format))
    return EXIT_OK


def _config_from_file(path) -> BenchConfig:
    """Benchmark configuration from JSON; see README for the keys."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}") from None
    if not isinstance(raw, dict) or not raw.get("datasets"):
        raise DataError(f"{path}: config needs a non-empty 'datasets' list")
    datasets = []
    for d in raw["datasets"]:
        if isinstance(d, str):
            datasets.append(DatasetConfig.from_spec(d))
        else:
            src = d.get("input") or d.get("path")
            if not src:
                raise DataError(f"{path}: dataset entry needs 'input' or 'path'")
            datasets.append(DatasetConfig.from_spec(
                src, d.get("test_fraction"), fmt=d.get("format"),
                label_column=d.get("label_column", 0), test_path=d.get("test")))
    g = raw.get("grid", {})
    scale = raw.get("scale_range", [0.0, 1.0])
    grid = GridSpec(g.get("gammas", default_gamma_grid()), g.get("Cs", default_c_grid()),
                    g.get("folds", 5), 0, tuple(scale) if scale else None)
    return BenchConfig(datasets, methods=raw.get("methods", ("svm", "kos")),
                       modes=raw.get("modes", ("learning", "dmm")),
                       seeds=raw.get("seeds", [0]), grid=grid,
                       scale_range=tuple(scale) if scale else None,
                       variant=raw.get("variant", "avg"),
                       imbalance_factor=raw.get("imbalance_factor", 2.0))


def _imbalance(text: str) -> float:
    v = math.inf if text.lower() in ("inf", "none", "off") else float(text)
    if not v >= 1:
        raise argparse.ArgumentTypeError("imbalance factor must be >= 1 or 'inf'")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kernelgamma", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("geometry", help="class diameters and inter-class distances")
    _add_input(p)
    _add_scaling(p)
    p.add_argument("--max-class-size", type=int, default=None,
                   help="subsample classes above this size (default: exact)")
    _add_out(p)
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("estimate-gamma", help="analytical RBF gamma")
    _add_input(p)
    _add_scaling(p)
    p.add_argument("--gamma-variant", choices=["min", "avg"], default="avg")
    p.add_argument("--max-class-size", type=int, default=None)
    _add_out(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("train", help="train a classifier and write a model file")
    _add_input(p)
    _add_scaling(p)
    p.add_argument("--method", choices=["svm", "kos"], required=True)
    p.add_argument("--gamma", type=float, default=None,
                   help="kernel gamma (default: analytical estimate)")
    p.add_argument("--gamma-variant", choices=["min", "avg"], default="avg")
    p.add_argument("--C", type=float, default=1.0, help="SVM penalty")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--imbalance-factor", type=_imbalance, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a model file to a dataset")
    p.add_argument("--model", required=True)
    _add_input(p)
    _add_out(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("tune", help="cross-validated grid search")
    _add_input(p)
    _add_scaling(p)
    p.add_argument("--method", choices=["svm", "kos"], required=True)
    p.add_argument("--gamma-grid", type=_float_list, default=None,
                   help="comma separated, e.g. 2^-15,2^-13 (default 2^-15..2^3 step x4)")
    p.add_argument("--c-grid", type=_float_list, default=None,
                   help="comma separated (default 2^-5..2^15 step x4)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel", action="store_true",
                   help="evaluate grid points on KERNELGAMMA_THREADS threads")
    _add_out(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("bench", help="learning vs analytical gamma benchmark")
    p.add_argument("--input", action="append", help="dataset (repeatable)")
    p.add_argument("--format", dest="fmt", choices=["libsvm", "csv"], default=None)
    p.add_argument("--label-column", type=int, default=0)
    p.add_argument("--config", default=None, help="JSON benchmark configuration")
    _add_scaling(p)
    p.add_argument("--method", action="append", choices=["svm", "kos"])
    p.add_argument("--mode", action="append", choices=["learning", "dmm"])
    p.add_argument("--seed", action="append", type=int)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--gamma-variant", choices=["min", "avg"], default="avg")
    p.add_argument("--imbalance-factor", type=_imbalance, default=2.0)
    p.add_argument("--gamma-grid", type=_float_list, default=None)
    p.add_argument("--c-grid", type=_float_list, default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--report-format", choices=["json", "csv", "markdown"], default="json")
    _add_out(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"kernelgamma: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, KernelError, FileNotFoundError) as exc:
        print(f"kernelgamma: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (dmm.DegenerateGeometryError, GeometryError, kos.KosError,
            svm.SvmConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"kernelgamma: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
