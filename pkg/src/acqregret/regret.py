"""
Counterfactual regret-difference experiment.

Each repeat runs one BO history whose queries always come from DIRECT.
Before every query the fitted snapshot is frozen and multi-start local
searches with N starts are run on it purely for bookkeeping: their
maximizers are scored on the noiseless objective and compared with the
DIRECT point.  Because the start sets are nested, the N-start answer is
never worse (in acquisition value) than the answer for fewer starts.
"""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .bo import BoConfig, History, bo_loop, history_header, history_lines
from .config import derive_seed
from .direct import DirectConfig, direct_maximize
from .domain import Domain
from .exceptions import ConfigError
from .local_search import (LocalSearchConfig, local_maximize, maximize_from_starts,
                           multi_start_prefixes, start_points)

__all__ = [
    "ExperimentConfig", "RegretRecord", "BasinStats", "ExperimentRun",
    "run_regret_experiment", "moving_average", "estimate_basins", "final_window_means",
    "records_header", "write_records_csv", "read_records_csv", "timing_table",
    "BASINS_HEADER",
]

# seed stream tags, disjoint from the ones used by the BO loop
_STARTS, _PROBES = 10, 11

BASINS_HEADER = "round,n_probes,rho_hat,beta_g_hat"


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment settings; every field is a config-file key."""

    benchmark: str = "branin"
    dim: int | None = None
    kernel: str = "matern52"
    acquisition: str = "ei"
    ucb_alpha: float = 2.0
    repeats: int = 50
    rounds: int = 50
    n_init: int = 3
    start_counts: tuple[int, ...] = (1, 10, 100, 1000)
    moving_avg_window: int = 10
    seed: int = 0
    direct_max_evals: int = 10000
    direct_max_depth: int = 60
    direct_epsilon_po: float = 1e-4
    eps_opt: float = 1e-5
    max_iters: int = 200
    memory: int = 10
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    obs_noise: float = 0.0
    gp_noise: float | None = None
    gp_restarts: int = 8
    coincidence_tol: float = 1e-3
    cluster_tol: float = 1e-2
    n_probes: int = 200
    basins: bool = False
    timing: bool = False
    timing_repeats: int = 3
    workers: int = 1

    def __post_init__(self):
        try:
            counts = tuple(int(c) for c in self.start_counts)
        except (TypeError, ValueError):
            raise ConfigError(f"start_counts must be integers, got {self.start_counts!r}") from None
        if not counts or any(c < 1 for c in counts):
            raise ConfigError(f"start_counts must be positive, got {self.start_counts}")
        if list(counts) != sorted(set(counts)):
            raise ConfigError(f"start_counts must be strictly ascending, got {counts}")
        object.__setattr__(self, "start_counts", counts)
        if self.repeats < 1 or self.moving_avg_window < 1 or self.n_probes < 1:
            raise ConfigError("repeats, moving_avg_window and n_probes must be >= 1")
        if not (self.coincidence_tol > 0 and self.cluster_tol > 0):
            raise ConfigError("coincidence_tol and cluster_tol must be positive")
        if self.timing_repeats < 1:
            raise ConfigError("timing_repeats must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.bo_config(0)

    def bo_config(self, repeat: int) -> BoConfig:
        shared = {f.name for f in dataclasses.fields(BoConfig)} & {
            f.name for f in dataclasses.fields(self)}
        kw = {k: getattr(self, k) for k in shared}
        kw["seed"] = derive_seed(self.seed, repeat)
        return BoConfig(**kw)

    @property
    def direct_cfg(self) -> DirectConfig:
        return DirectConfig(self.direct_max_evals, self.direct_max_depth, self.direct_epsilon_po)

    @property
    def local_cfg(self) -> LocalSearchConfig:
        return LocalSearchConfig(self.eps_opt, self.max_iters, self.memory,
                                 self.wolfe_c1, self.wolfe_c2)


@dataclass
class RegretRecord:
    """One round of one repeat.  Per-N fields are dicts keyed by N."""

    repeat: int
    round: int
    f_global: float
    f_local: dict
    regret_diff: dict
    time_global: float
    time_local: dict
    n_evals_global: int
    n_evals: dict
    coincided: dict
    acq_global: float = math.nan
    acq_local: dict = field(default_factory=dict)
    benchmark: str = ""
    error: str | None = None


@dataclass
class BasinStats:
    round: int
    n_probes: int
    rho_hat: int
    beta_hat: np.ndarray
    beta_g_hat: float
    centers: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    repeat: int = 0


@dataclass
class ExperimentRun:
    config: ExperimentConfig
    records: list
    histories: list
    basins: list


def moving_average(series, window: int) -> np.ndarray:
    """Trailing mean over up to ``window`` elements (shorter at the start)."""
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        return s.copy()
    # sum each window directly; a running cumsum would cancel away small values
    w = min(window, s.size)
    padded = np.concatenate([np.zeros(w - 1), s])
    sums = np.lib.stride_tricks.sliding_window_view(padded, w).sum(axis=1)
    return sums / np.minimum(np.arange(1, s.size + 1), w)


def estimate_basins(model, spec, domain: Domain, n_probes: int = 200, cluster_tol: float = 1e-2,
                    seed: int = 0, global_x=None, coincidence_tol: float = 1e-3,
                    local_cfg: LocalSearchConfig | None = None, round_index: int = 0,
                    acq=None) -> BasinStats:
    """Count the local maxima reached from ``n_probes`` random single starts.

    Converged points are clustered by single linkage at ``cluster_tol``
    times the domain diameter.  ``beta_g_hat`` is the share of probes in
    the cluster whose best member lies within ``coincidence_tol`` times
    the diameter of ``global_x``; it is 0 if no cluster qualifies.  Without
    ``global_x`` the cluster with the highest value stands in for it.
    """
    from .acquisition import Acquisition

    if n_probes < 1:
        raise ConfigError(f"n_probes must be >= 1, got {n_probes}")
    acq = acq if acq is not None else Acquisition(spec, model)
    starts = start_points(domain, n_probes, seed)
    found = [local_maximize(acq, domain, x0, local_cfg) for x0 in starts]
    pts = np.array([r.x_star for r in found])
    vals = np.array([r.value for r in found])
    diam = domain.diameter
    if n_probes == 1:
        labels = np.zeros(1, dtype=int)
    else:
        labels = fcluster(linkage(pts, method="single"), cluster_tol * diam,
                          criterion="distance") - 1
    k = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=k)
    beta = counts / n_probes
    best = [int(np.flatnonzero(labels == c)[np.argmax(vals[labels == c])]) for c in range(k)]
    centers = pts[best]
    if global_x is None:
        g = int(np.argmax(vals[best]))
        beta_g = float(beta[g])
    else:
        dist = np.linalg.norm(centers - np.asarray(global_x, dtype=float), axis=1)
        near = np.flatnonzero(dist <= coincidence_tol * diam)
        beta_g = float(beta[near[np.argmin(dist[near])]]) if near.size else 0.0
    return BasinStats(round_index, n_probes, k, beta, beta_g, centers)


def _timed(run, reps):
    """Run ``reps`` times and keep the fastest wall time.

    The optimizers are deterministic, so only the timing differs between
    runs; taking the minimum filters out cold caches and scheduler noise.
    """
    out = run()
    for _ in range(reps - 1):
        out.wall_time = min(out.wall_time, run().wall_time)
    return out


def _run_repeat(cfg: ExperimentConfig, repeat: int):
    bo_cfg = cfg.bo_config(repeat)
    bench = bo_cfg.get_benchmark()
    unit = Domain.unit(bench.dim)
    diam = bench.domain.diameter
    counts = cfg.start_counts
    records, basins = [], []

    def choose(t, snap, acq):
        seed = derive_seed(bo_cfg.seed, _STARTS, t)
        if cfg.timing:
            reps = cfg.timing_repeats
            g = _timed(lambda: direct_maximize(acq, unit, cfg.direct_cfg), reps)
            # one start set per round, like the acquisition it is setup and not timed
            starts = start_points(unit, max(counts), seed)
            loc = {n: _timed(lambda n=n: maximize_from_starts(acq, unit, starts[:n],
                                                               cfg.local_cfg), reps)
                   for n in counts}
        else:
            g = direct_maximize(acq, unit, cfg.direct_cfg)
            loc = multi_start_prefixes(acq, unit, counts, cfg.local_cfg, seed)
        xg = bench.domain.from_unit(g.x_star)
        f_global = bench.evaluate(xg)
        f_local, diff, coincided = {}, {}, {}
        for n, r in loc.items():
            xm = bench.domain.from_unit(r.x_star)
            f_local[n] = bench.evaluate(xm)
            diff[n] = abs(f_global - f_local[n])
            coincided[n] = bool(np.linalg.norm(xm - xg) <= cfg.coincidence_tol * diam)
        nan = math.nan
        records.append(RegretRecord(
            repeat=repeat, round=t, f_global=f_global, f_local=f_local, regret_diff=diff,
            time_global=g.wall_time if cfg.timing else nan,
            time_local={n: (r.wall_time if cfg.timing else nan) for n, r in loc.items()},
            n_evals_global=g.n_evals, n_evals={n: r.n_evals for n, r in loc.items()},
            coincided=coincided, acq_global=g.value,
            acq_local={n: r.value for n, r in loc.items()}, benchmark=bench.name,
        ))
        if cfg.basins:
            b = estimate_basins(snap.model, snap.spec, unit, cfg.n_probes, cfg.cluster_tol,
                                derive_seed(bo_cfg.seed, _PROBES, t), g.x_star,
                                cfg.coincidence_tol, cfg.local_cfg, t, acq)
            b.repeat = repeat
            basins.append(b)
        return g

    history = bo_loop(bo_cfg, choose)
    if history.error is not None:
        t = len(records) + 1
        nan = math.nan
        records.append(RegretRecord(
            repeat, t, nan, {n: nan for n in counts}, {n: nan for n in counts}, nan,
            {n: nan for n in counts}, 0, {n: 0 for n in counts}, {n: False for n in counts},
            benchmark=bench.name, error=history.error,
        ))
    # snapshots hold full models; drop them so results stay light to ship between workers
    history.snapshots = []
    return records, history, basins


def run_regret_experiment(cfg: ExperimentConfig) -> ExperimentRun:
    """Run all repeats and return records, histories and basin statistics.

    Repeats run in worker processes when ``cfg.workers > 1``, except in
    timing mode where every measurement is taken in this process.
    """
    reps = range(cfg.repeats)
    if cfg.workers > 1 and not cfg.timing:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_repeat, [cfg] * cfg.repeats, reps))
    else:
        parts = [_run_repeat(cfg, r) for r in reps]
    records = [rec for p in parts for rec in p[0]]
    basins = [b for p in parts for b in p[2]]
    return ExperimentRun(cfg, records, [p[1] for p in parts], basins)


def final_window_means(records, counts, window: int = 10, rounds: int | None = None) -> dict:
    """Mean over repeats of the last moving-average regret difference per N.

    Rounds carrying an error tag are skipped.
    """
    by_rep = {}
    for r in records:
        if r.error is None:
            by_rep.setdefault(r.repeat, []).append(r)
    out = {}
    for n in counts:
        finals = []
        for recs in by_rep.values():
            recs = sorted(recs, key=lambda r: r.round)
            series = [r.regret_diff[n] for r in recs]
            if series:
                finals.append(moving_average(series, window)[-1])
        out[n] = float(np.mean(finals)) if finals else math.nan
    return out


def records_header(counts) -> str:
    cols = ["repeat", "round", "f_global"]
    cols += [f"f_local_{n}" for n in counts]
    cols += [f"regret_diff_{n}" for n in counts]
    cols += ["time_global_s"] + [f"time_{n}_s" for n in counts]
    cols += [f"coincided_{n}" for n in counts]
    return ",".join(cols)


def _fmt(v) -> str:
    return repr(float(v))


def write_records_csv(records, counts, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(records_header(counts) + "\n")
        for r in records:
            cells = [str(r.repeat), str(r.round), _fmt(r.f_global)]
            cells += [_fmt(r.f_local[n]) for n in counts]
            cells += [_fmt(r.regret_diff[n]) for n in counts]
            cells += [_fmt(r.time_global)] + [_fmt(r.time_local[n]) for n in counts]
            cells += [str(int(r.coincided[n])) for n in counts]
            fh.write(",".join(cells) + "\n")


def read_records_csv(path, benchmark: str = ""):
    """Parse a records CSV back into :class:`RegretRecord` objects."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        counts = [int(c[len("f_local_"):]) for c in header if c.startswith("f_local_")]
        col = {name: i for i, name in enumerate(header)}
        records = []
        for line in fh:
            cells = line.strip().split(",")
            if len(cells) != len(header):
                continue
            get = lambda name: cells[col[name]]  # noqa: E731
            records.append(RegretRecord(
                repeat=int(get("repeat")), round=int(get("round")),
                f_global=float(get("f_global")),
                f_local={n: float(get(f"f_local_{n}")) for n in counts},
                regret_diff={n: float(get(f"regret_diff_{n}")) for n in counts},
                time_global=float(get("time_global_s")),
                time_local={n: float(get(f"time_{n}_s")) for n in counts},
                n_evals_global=0, n_evals={n: 0 for n in counts},
                coincided={n: get(f"coincided_{n}") == "1" for n in counts},
                benchmark=benchmark,
            ))
    return records, counts


def write_basins_csv(basins, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(BASINS_HEADER + "\n")
        for b in basins:
            fh.write(f"{b.round},{b.n_probes},{b.rho_hat},{_fmt(b.beta_g_hat)}\n")


def write_history_csv(histories, path, dim: int):
    """All repeats' histories in one file with a leading ``repeat`` column."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("repeat," + history_header(dim) + "\n")
        for rep, h in enumerate(histories):
            for line in history_lines(h, f"{rep},"):
                fh.write(line + "\n")


def timing_table(records, counts=None):
    """Mean seconds per acquisition optimization, per benchmark and strategy.

    Returns ``(csv_text, aligned_text)``; the CSV is in seconds and the
    aligned text in milliseconds.  Strategies with no finite timing are left
    out.
    """
    if not records:
        raise ConfigError("timing_table needs at least one record")
    if counts is None:
        counts = sorted(records[0].time_local)
    benches = list(dict.fromkeys(r.benchmark or "?" for r in records))
    strategies = [("DIRECT", lambda r: r.time_global)]
    strategies += [(f"local({n})", lambda r, n=n: r.time_local.get(n, math.nan)) for n in counts]
    table = {}
    for b in benches:
        rows = [r for r in records if (r.benchmark or "?") == b and r.error is None]
        for name, get in strategies:
            vals = np.array([get(r) for r in rows], dtype=float)
            vals = vals[np.isfinite(vals)]
            table[b, name] = float(vals.mean()) if vals.size else math.nan
    keep = [name for name, _ in strategies
            if any(math.isfinite(table[b, name]) for b in benches)]
    if not keep:
        raise ConfigError("records carry no timings; rerun regret-exp with --timing")
    csv_lines = ["benchmark," + ",".join(keep)]
    for b in benches:
        csv_lines.append(b + "," + ",".join(_fmt(table[b, s]) for s in keep))
    width = max([len(b) for b in benches] + [9])
    colw = max([len(s) for s in keep] + [10])
    text = ["mean wall time per optimization (ms)",
            "benchmark".ljust(width) + "".join(s.rjust(colw + 2) for s in keep)]
    for b in benches:
        text.append(b.ljust(width)
                    + "".join(f"{table[b, s] * 1e3:.3f}".rjust(colw + 2) for s in keep))
    return "\n".join(csv_lines) + "\n", "\n".join(text) + "\n"


def save_run(run: ExperimentRun, out_dir) -> dict:
    """Write records, history and (if any) basin CSVs; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    counts = run.config.start_counts
    paths = {"records": os.path.join(out_dir, "records.csv"),
             "history": os.path.join(out_dir, "history.csv")}
    write_records_csv(run.records, counts, paths["records"])
    dim = run.config.bo_config(0).get_benchmark().dim
    write_history_csv(run.histories, paths["history"], dim)
    if run.config.basins:
        paths["basins"] = os.path.join(out_dir, "basins.csv")
        write_basins_csv(run.basins, paths["basins"])
    errors = [r for r in run.records if r.error is not None]
    if errors:
        paths["errors"] = os.path.join(out_dir, "errors.txt")
        with open(paths["errors"], "w", encoding="utf-8") as fh:
            for r in errors:
                fh.write(f"repeat {r.repeat}: {r.error}\n")
    return paths
