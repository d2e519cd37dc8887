"""
Command-line entry point: ``acqregret <verb> [options]``.

Exit status is 0 on success, 2 for usage or configuration errors and 1 for
failures while running.  Every verb that writes an output directory also
writes ``manifest.cfg`` there; passing it back through ``--config``
reproduces the run.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .acquisition import Acquisition, AcquisitionSpec
from .benchmarks import BENCHMARK_NAMES, get_benchmark
from .bo import BoConfig, run_bo, write_history_csv
from .config import format_config, from_mapping, read_config, to_mapping
from .direct import DirectConfig, direct_maximize
from .domain import Domain
from .exceptions import ConfigError, RegistryError
from .gp import GpModel, fit_gp
from .local_search import LocalSearchConfig, multi_start_maximize
from .plots import emit_plots
from .regret import (ExperimentConfig, estimate_basins, final_window_means, read_records_csv,
                     run_regret_experiment, save_run, timing_table)

MANIFEST = "manifest.cfg"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _resolve(cls, args, extra=None, defaults=None):
    """Defaults, then the config file, then ``--set`` overrides, then dedicated flags."""
    mapping = dict(defaults or {})
    mapping.update(read_config(args.config) if args.config else {})
    mapping.update(_overrides(args.set))
    mapping.update({k: v for k, v in (extra or {}).items() if v is not None})
    if getattr(args, "seed", None) is not None:
        mapping["seed"] = str(args.seed)
    return from_mapping(cls, mapping)


def _write_manifest(out_dir, cfg, verb):
    os.makedirs(out_dir, exist_ok=True)
    header = f"acqregret {__version__} {verb}\nreplay: acqregret {verb} --config {MANIFEST}"
    path = os.path.join(out_dir, MANIFEST)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_config(to_mapping(cfg), header))
    return path


def _read_manifest(in_dir) -> dict:
    path = os.path.join(in_dir, MANIFEST)
    return read_config(path) if os.path.isfile(path) else {}


# ------------------------------------------------------------------ verbs


def cmd_bench_list(args):
    for name in BENCHMARK_NAMES:
        b = get_benchmark(name)
        if args.verbose:
            print(b.describe())
        else:
            box = " x ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(b.domain.lower, b.domain.upper))
            print(f"{name:<13} d={b.dim:<2} f_min={b.f_min:<+12.6g} box={box}")
    return 0


@dataclass(frozen=True)
class FitConfig:
    data: str = ""
    kernel: str = "matern52"
    noise: float | None = None
    gp_restarts: int = 8
    seed: int = 0


@dataclass(frozen=True)
class AcqConfig:
    model: str = ""
    acquisition: str = "ei"
    ucb_alpha: float = 2.0
    incumbent: float | None = None
    optimizer: str = "direct"
    n_starts: int = 10
    direct_max_evals: int = 10000
    direct_max_depth: int = 60
    direct_epsilon_po: float = 1e-4
    eps_opt: float = 1e-5
    max_iters: int = 200
    n_probes: int = 200
    cluster_tol: float = 1e-2
    coincidence_tol: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in ("direct", "multi_local"):
            raise ConfigError(f"optimizer must be direct or multi_local, got {self.optimizer!r}")


def _load_data(path):
    if not os.path.isfile(path):
        raise ConfigError(f"data file not found: {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1], data[:, -1]


def _load_model(path) -> GpModel:
    if not os.path.isfile(path):
        raise ConfigError(f"model file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return GpModel.from_text(fh.read())


def _spec(cfg: AcqConfig, model: GpModel) -> AcquisitionSpec:
    if cfg.incumbent is None:
        return AcquisitionSpec.for_targets(cfg.acquisition, model.y, cfg.ucb_alpha)
    return AcquisitionSpec(cfg.acquisition, cfg.incumbent, cfg.ucb_alpha)


def _emit(text, out_dir, name):
    print(text, end="" if text.endswith("\n") else "\n")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def cmd_fit(args):
    cfg = _resolve(FitConfig, args, {"data": args.data, "kernel": args.kernel})
    X, y = _load_data(cfg.data)
    model = fit_gp(X, y, cfg.kernel, cfg.noise, cfg.seed, cfg.gp_restarts)
    _emit(model.to_text(), args.out, "model.txt")
    if args.out:
        _write_manifest(args.out, cfg, "fit")
    return 0


def cmd_optimize_acq(args):
    cfg = _resolve(AcqConfig, args, {"model": args.model, "acquisition": args.acq,
                                     "optimizer": args.optimizer, "n_starts": args.n_starts})
    model = _load_model(cfg.model)
    acq = Acquisition(_spec(cfg, model), model)
    domain = Domain.unit(model.dim)
    if cfg.optimizer == "direct":
        res = direct_maximize(acq, domain, DirectConfig(cfg.direct_max_evals,
                                                        cfg.direct_max_depth,
                                                        cfg.direct_epsilon_po))
    else:
        res = multi_start_maximize(acq, domain, cfg.n_starts,
                                   LocalSearchConfig(cfg.eps_opt, cfg.max_iters), cfg.seed)
    lines = [
        f"strategy = {res.strategy}",
        "x = " + ", ".join(repr(float(v)) for v in res.x_star),
        f"value = {res.value!r}",
        f"n_evals = {res.n_evals}",
        f"wall_time_s = {res.wall_time:.6f}",
    ]
    _emit("\n".join(lines) + "\n", args.out, "optimum.txt")
    if args.out:
        _write_manifest(args.out, cfg, "optimize-acq")
    return 0


def cmd_estimate_basins(args):
    cfg = _resolve(AcqConfig, args, {"model": args.model, "acquisition": args.acq,
                                     "n_probes": args.n_probes})
    model = _load_model(cfg.model)
    spec = _spec(cfg, model)
    domain = Domain.unit(model.dim)
    g = direct_maximize(Acquisition(spec, model), domain,
                        DirectConfig(cfg.direct_max_evals, cfg.direct_max_depth,
                                     cfg.direct_epsilon_po))
    stats = estimate_basins(model, spec, domain, cfg.n_probes, cfg.cluster_tol, cfg.seed,
                            g.x_star, cfg.coincidence_tol,
                            LocalSearchConfig(cfg.eps_opt, cfg.max_iters))
    lines = [f"n_probes = {stats.n_probes}", f"rho_hat = {stats.rho_hat}",
             f"beta_g_hat = {stats.beta_g_hat!r}",
             "beta_hat = " + ", ".join(repr(float(b)) for b in stats.beta_hat)]
    for i, c in enumerate(stats.centers):
        lines.append(f"center_{i} = " + ", ".join(repr(float(v)) for v in c))
    _emit("\n".join(lines) + "\n", args.out, "basins.txt")
    if args.out:
        _write_manifest(args.out, cfg, "estimate-basins")
    return 0


def cmd_run_bo(args):
    cfg = _resolve(BoConfig, args, {"benchmark": args.benchmark})
    history = run_bo(cfg)
    os.makedirs(args.out, exist_ok=True)
    _write_manifest(args.out, cfg, "run-bo")
    bench = cfg.get_benchmark()
    write_history_csv(history, os.path.join(args.out, "history.csv"), bench.dim)
    print(f"{bench.name}: {len(history.rows)} observations, best = {history.best:.6g}"
          f" (f_min = {bench.f_min:.6g})")
    if history.error:
        print(f"error: {history.error}", file=sys.stderr)
        return 1
    return 0


def _env_workers() -> str:
    """Worker count from ``ACQREGRET_THREADS``, else the logical core count."""
    raw = os.environ.get("ACQREGRET_THREADS", "").strip()
    return raw or str(os.cpu_count() or 1)


def cmd_regret_exp(args):
    extra = {"benchmark": args.benchmark}
    if args.basins:
        extra["basins"] = "true"
    if args.timing:
        extra["timing"] = "true"
    cfg = _resolve(ExperimentConfig, args, extra, {"workers": _env_workers()})
    if cfg.timing and cfg.workers > 1:
        print("note: timing runs use a single worker; workers setting ignored", file=sys.stderr)
    run = run_regret_experiment(cfg)
    _write_manifest(args.out, cfg, "regret-exp")
    paths = save_run(run, args.out)
    if cfg.timing:
        csv_text, table = timing_table(run.records, cfg.start_counts)
        with open(os.path.join(args.out, "timing.csv"), "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        print(table, end="")
    means = final_window_means(run.records, cfg.start_counts, cfg.moving_avg_window)
    print("final moving-average regret difference:",
          ", ".join(f"N={n}: {v:.4g}" for n, v in means.items()))
    print("wrote " + ", ".join(sorted(paths.values())))
    return 1 if "errors" in paths else 0


def _record_dirs(in_dir):
    if not os.path.isdir(in_dir):
        raise ConfigError(f"input directory not found: {in_dir}")
    if os.path.isfile(os.path.join(in_dir, "records.csv")):
        return [in_dir]
    dirs = sorted(os.path.dirname(p) for p in glob.glob(os.path.join(in_dir, "*", "records.csv")))
    if not dirs:
        raise ConfigError(f"no records.csv under {in_dir}")
    return dirs


def _bench_name(d):
    m = _read_manifest(d)
    if "benchmark" in m:
        try:
            dim = m.get("dim", "none")
            return get_benchmark(m["benchmark"], None if dim in ("", "none") else int(dim)).name
        except (RegistryError, ValueError):
            return m["benchmark"]
    return os.path.basename(os.path.normpath(d))


def cmd_timing_table(args):
    records, counts = [], None
    for d in _record_dirs(args.in_dir):
        recs, c = read_records_csv(os.path.join(d, "records.csv"), _bench_name(d))
        records += recs
        counts = c if counts is None else sorted(set(counts) | set(c))
    csv_text, table = timing_table(records, counts)
    with open(os.path.join(args.in_dir, "timing.csv"), "w", encoding="utf-8") as fh:
        fh.write(csv_text)
    with open(os.path.join(args.in_dir, "timing.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    print(table, end="")
    return 0


def _histories_best(path):
    """Incumbent best after each BO round, per repeat, from history.csv."""
    if not os.path.isfile(path):
        return []
    out = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        ib, istrat = header.index("best"), header.index("strategy")
        for line in fh:
            cells = line.strip().split(",")
            if cells[istrat] != "init":
                out.setdefault(int(cells[0]), []).append(float(cells[ib]))
    return [out[k] for k in sorted(out)]


def cmd_plot(args):
    written = []
    for d in _record_dirs(args.in_dir):
        manifest = _read_manifest(d)
        records, counts = read_records_csv(os.path.join(d, "records.csv"))
        window = int(manifest.get("moving_avg_window", 10))
        best = _histories_best(os.path.join(d, "history.csv"))
        written += emit_plots(records, best, counts, d, _bench_name(d), window)
    print("wrote " + ", ".join(written))
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="acqregret",
                description="Global versus multi-started local acquisition optimization.")
    p.add_argument("--version", action="version", version=f"acqregret {__version__}")
    sub = p.add_subparsers(dest="verb", metavar="verb", parser_class=_Parser)

    def configurable(sp, seed=True):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
        if seed:
            sp.add_argument("--seed", type=int, help="override the config seed")

    sp = sub.add_parser("bench-list", help="list the benchmark registry")
    sp.add_argument("-v", "--verbose", action="store_true", help="print formulas and sources")
    sp.set_defaults(func=cmd_bench_list)

    sp = sub.add_parser("fit", help="fit a GP to a CSV of x columns followed by y")
    sp.add_argument("--data", help="CSV with a header row; last column is y")
    sp.add_argument("--kernel", help="se, matern52 or matern32")
    sp.add_argument("--out", help="directory for model.txt and the manifest")
    configurable(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("optimize-acq", help="maximize an acquisition on a saved model")
    sp.add_argument("--model", help="model file written by 'fit'")
    sp.add_argument("--acq", help="pi, ei or ucb")
    sp.add_argument("--optimizer", help="direct or multi_local")
    sp.add_argument("--n-starts", dest="n_starts", help="starts for multi_local")
    sp.add_argument("--out", help="directory for optimum.txt and the manifest")
    configurable(sp)
    sp.set_defaults(func=cmd_optimize_acq)

    sp = sub.add_parser("estimate-basins", help="count acquisition local maxima on a saved model")
    sp.add_argument("--model", help="model file written by 'fit'")
    sp.add_argument("--acq", help="pi, ei or ucb")
    sp.add_argument("--n-probes", dest="n_probes", help="number of single-start probes")
    sp.add_argument("--out", help="directory for basins.txt and the manifest")
    configurable(sp)
    sp.set_defaults(func=cmd_estimate_basins)

    sp = sub.add_parser("run-bo", help="run one BO loop")
    sp.add_argument("--benchmark", help="benchmark name (see bench-list)")
    sp.add_argument("--out", required=True, help="output directory")
    configurable(sp)
    sp.set_defaults(func=cmd_run_bo)

    sp = sub.add_parser("regret-exp", help="run the regret-difference experiment")
    sp.add_argument("--benchmark", help="benchmark name (see bench-list)")
    sp.add_argument("--basins", action="store_true", help="estimate basins every round")
    sp.add_argument("--timing", action="store_true",
                    help="record wall times (runs single-process)")
    sp.add_argument("--out", required=True, help="output directory")
    configurable(sp)
    sp.set_defaults(func=cmd_regret_exp)

    sp = sub.add_parser("timing-table", help="summarize timings of regret-exp outputs")
    sp.add_argument("--in", dest="in_dir", required=True,
                    help="a regret-exp output directory or a parent of several")
    sp.set_defaults(func=cmd_timing_table)

    sp = sub.add_parser("plot", help="draw the figures for regret-exp outputs")
    sp.add_argument("--in", dest="in_dir", required=True,
                    help="a regret-exp output directory or a parent of several")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb is None:
            raise UsageError("acqregret: a verb is required (see --help)")
        return args.func(args)
    except (UsageError, ConfigError, RegistryError) as exc:
        msg = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        # --help and --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
