"""
The Bayesian optimization loop.

Inputs are mapped to the unit cube and targets standardized every round
before fitting; the acquisition is maximized on the unit cube and queries
are mapped back to the benchmark box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .acquisition import Acquisition, AcquisitionKind, AcquisitionSpec
from .benchmarks import Benchmark, get_benchmark, observe
from .config import derive_seed
from .direct import DirectConfig, direct_maximize
from .domain import Domain
from .exceptions import ConfigError, IllConditionedModelError
from .gp import GpModel, fit_gp
from .kernels import KernelFamily
from .local_search import LocalSearchConfig, multi_start_maximize

__all__ = ["BoConfig", "History", "HistoryRow", "Snapshot", "run_bo", "fit_snapshot",
           "HISTORY_HEADER", "bo_loop", "history_header",
           "write_history_csv", "initial_design"]

# stream tags for derive_seed
_INIT, _NOISE, _FIT, _STARTS = 0, 1, 2, 3


@dataclass(frozen=True)
class BoConfig:
    """Settings of one BO run; flat so it maps onto a config file."""

    benchmark: str = "branin"
    dim: int | None = None
    kernel: str = "matern52"
    acquisition: str = "ei"
    ucb_alpha: float = 2.0
    rounds: int = 50
    n_init: int = 3
    optimizer: str = "direct"
    n_starts: int = 1
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
    seed: int = 0
    timing: bool = False

    def __post_init__(self):
        if self.rounds < 1 or self.n_init < 1:
            raise ConfigError("rounds and n_init must be >= 1")
        if self.optimizer not in ("direct", "multi_local"):
            raise ConfigError(f"optimizer must be direct or multi_local, got {self.optimizer!r}")
        if self.n_starts < 1:
            raise ConfigError("n_starts must be >= 1")
        if self.obs_noise < 0:
            raise ConfigError("obs_noise must be nonnegative")
        KernelFamily.parse(self.kernel)
        AcquisitionKind.parse(self.acquisition)
        self.direct_cfg
        self.local_cfg

    @property
    def direct_cfg(self) -> DirectConfig:
        return DirectConfig(self.direct_max_evals, self.direct_max_depth, self.direct_epsilon_po)

    @property
    def local_cfg(self) -> LocalSearchConfig:
        return LocalSearchConfig(self.eps_opt, self.max_iters, self.memory,
                                 self.wolfe_c1, self.wolfe_c2)

    def get_benchmark(self) -> Benchmark:
        return get_benchmark(self.benchmark, self.dim)


@dataclass(frozen=True)
class HistoryRow:
    round: int
    x: np.ndarray
    y: float
    best: float
    acq_value: float
    strategy: str
    wall_time: float


@dataclass(frozen=True)
class Snapshot:
    """Surrogate state used to choose one query (unit-cube coordinates)."""

    model: GpModel
    spec: AcquisitionSpec
    y_mean: float
    y_scale: float

    def acquisition(self) -> Acquisition:
        return Acquisition(self.spec, self.model)


@dataclass
class History:
    rows: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    error: str | None = None

    @property
    def best(self) -> float:
        return self.rows[-1].best if self.rows else math.inf

    def append(self, x, y, acq_value=math.nan, strategy="init", wall_time=math.nan):
        best = min(self.best, y)
        self.rows.append(HistoryRow(len(self.rows) + 1, np.asarray(x, dtype=float),
                                    float(y), best, float(acq_value), strategy, float(wall_time)))

    def X(self) -> np.ndarray:
        return np.array([r.x for r in self.rows])

    def y(self) -> np.ndarray:
        return np.array([r.y for r in self.rows])


HISTORY_HEADER = "round,{xs},y,best,acq_value,strategy,wall_time_s"


def history_header(dim: int) -> str:
    return HISTORY_HEADER.format(xs=",".join(f"x_{j}" for j in range(dim)))


def fit_snapshot(X_unit, y, kernel, acquisition, ucb_alpha=2.0, gp_noise=None,
                 seed=0, n_restarts=8) -> Snapshot:
    """Standardize targets, fit the GP and build the acquisition spec."""
    y = np.asarray(y, dtype=float)
    mean = float(np.mean(y))
    scale = float(np.std(y))
    if not scale > 0:
        scale = 1.0
    ys = (y - mean) / scale
    model = fit_gp(X_unit, ys, kernel, noise=gp_noise, seed=seed, n_restarts=n_restarts)
    spec = AcquisitionSpec.for_targets(acquisition, ys, ucb_alpha)
    return Snapshot(model, spec, mean, scale)


def initial_design(bench: Benchmark, cfg) -> History:
    history = History()
    rng = np.random.default_rng(derive_seed(cfg.seed, _INIT))
    noise_rng = np.random.default_rng(derive_seed(cfg.seed, _NOISE))
    for u in rng.random((cfg.n_init, bench.dim)):
        x = bench.domain.from_unit(u)
        history.append(x, observe(bench, x, cfg.obs_noise, noise_rng))
    return history, noise_rng


def bo_loop(cfg, choose):
    """Shared BO loop; ``choose(t, snapshot, acq) -> OptResult`` picks each query.

    ``cfg`` needs the surrogate fields of :class:`BoConfig`.  Returns the
    history; a surrogate failure stops the loop and sets ``history.error``.
    """
    bench = cfg.get_benchmark()
    history, noise_rng = initial_design(bench, cfg)
    for t in range(1, cfg.rounds + 1):
        X_unit = bench.domain.to_unit(history.X())
        try:
            snap = fit_snapshot(X_unit, history.y(), cfg.kernel, cfg.acquisition,
                                cfg.ucb_alpha, cfg.gp_noise,
                                derive_seed(cfg.seed, _FIT, t), cfg.gp_restarts)
        except (IllConditionedModelError, np.linalg.LinAlgError) as exc:
            history.error = f"round {t}: surrogate fit failed: {exc}"
            break
        res = choose(t, snap, snap.acquisition())
        x = bench.domain.clip(bench.domain.from_unit(res.x_star))
        y = observe(bench, x, cfg.obs_noise, noise_rng)
        history.snapshots.append(snap)
        history.append(x, y, res.value, res.strategy,
                       res.wall_time if cfg.timing else math.nan)
    return history


def run_bo(cfg: BoConfig) -> History:
    """Run ``cfg.rounds`` BO iterations after ``cfg.n_init`` random points.

    A surrogate failure ends the run early; the partial history is returned
    with :attr:`History.error` set.
    """
    unit = Domain.unit(cfg.get_benchmark().dim)

    def choose(t, snap, acq):
        if cfg.optimizer == "direct":
            return direct_maximize(acq, unit, cfg.direct_cfg)
        return multi_start_maximize(acq, unit, cfg.n_starts, cfg.local_cfg,
                                    derive_seed(cfg.seed, _STARTS, t))

    return bo_loop(cfg, choose)


def history_lines(history: History, prefix: str = ""):
    for r in history.rows:
        cells = [str(r.round)] + [repr(float(v)) for v in r.x]
        cells += [repr(r.y), repr(r.best), repr(r.acq_value), r.strategy, repr(r.wall_time)]
        yield prefix + ",".join(cells)


def write_history_csv(history: History, path, dim: int):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(history_header(dim) + "\n")
        for line in history_lines(history):
            fh.write(line + "\n")
