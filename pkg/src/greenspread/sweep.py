"""Parameter grids, replicated runs and aggregation.

Cells are the cartesian product alpha -> delta -> eip -> eit -> lt (alpha
varies slowest). Replicate ``r`` of cell ``c`` runs with seed
``mix_seed(base_seed, c, r)``. Rows are ordered by (cell, replicate, step)
whatever the execution order, so output does not depend on parallelism.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import SpreadParams, run_simulation
from .errors import ConfigError, SweepError
from .metrics import METRIC_NAMES
from .netgen import MultilayerNetwork, NetworkConfig, assemble_network
from .rng import mix_seed

GRID_AXES = ("alpha", "delta", "eip", "eit", "lt")

FULL_GRID = {
    "alphas": (0.05, 0.1),
    "deltas": (0.05, 0.1),
    "eips": (0.25, 0.5, 0.75, 1.0),
    "eits": tuple(range(1, 16)),
    "lts": (0.05, 0.1, 0.15, 0.2, 0.25),
    "ss": 100,
    "sgl": 0.0,
}


@dataclass(frozen=True)
class GridSpec:
    alphas: tuple = FULL_GRID["alphas"]
    deltas: tuple = FULL_GRID["deltas"]
    eips: tuple = FULL_GRID["eips"]
    eits: tuple = FULL_GRID["eits"]
    lts: tuple = FULL_GRID["lts"]
    ss: int = 100
    sgl: float = 0.0
    replicates: int = 30
    base_seed: int = 0
    network: NetworkConfig | str = field(default_factory=NetworkConfig)
    regenerate_network_per_replicate: bool = False

    def __post_init__(self):
        for name in ("alphas", "deltas", "eips", "eits", "lts"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        for name in ("alphas", "deltas", "eips", "eits", "lts"):
            if not getattr(self, name):
                raise ConfigError(name, "non-empty list")
        if isinstance(self.replicates, bool) or int(self.replicates) != self.replicates \
                or self.replicates < 1:
            raise ConfigError("replicates", "positive integer", self.replicates)
        if int(self.base_seed) != self.base_seed or not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed", "64-bit unsigned integer", self.base_seed)
        # every value must make a valid SpreadParams
        for name, axis in zip(("alphas", "deltas", "eips", "eits", "lts"), GRID_AXES):
            for v in getattr(self, name):
                try:
                    SpreadParams(ss=self.ss, sgl=self.sgl, **{axis: v})
                except ConfigError as exc:
                    key = name if exc.key == axis else exc.key
                    raise ConfigError(key, exc.constraint, exc.value) from None

    @property
    def n_cells(self) -> int:
        return (len(self.alphas) * len(self.deltas) * len(self.eips)
                * len(self.eits) * len(self.lts))

    def to_dict(self) -> dict:
        d = {k: list(getattr(self, k)) for k in ("alphas", "deltas", "eips", "eits", "lts")}
        d.update(ss=self.ss, sgl=self.sgl, replicates=self.replicates,
                 base_seed=self.base_seed,
                 regenerate_network_per_replicate=self.regenerate_network_per_replicate)
        d["network"] = (self.network if isinstance(self.network, str)
                        else self.network.to_dict())
        return d


def full_grid(**overrides) -> GridSpec:
    return GridSpec(**overrides)


def cell_seed(base_seed: int, cell_index: int, replicate: int) -> int:
    return mix_seed(base_seed, cell_index, replicate)


def enumerate_cells(grid: GridSpec) -> list[SpreadParams]:
    """Cell parameters in fixed enumeration order; ``seed`` is replicate 0's."""
    cells = []
    for i, (a, d, eip, eit, lt) in enumerate(itertools.product(
            grid.alphas, grid.deltas, grid.eips, grid.eits, grid.lts)):
        cells.append(SpreadParams(sgl=grid.sgl, alpha=a, delta=d, eip=eip, eit=eit,
                                  ss=grid.ss, lt=lt, seed=cell_seed(grid.base_seed, i, 0)))
    return cells


@dataclass
class SweepResult:
    """Long-format table, one row per (cell, replicate, step), columnar."""

    grid: GridSpec
    cell_index: np.ndarray
    replicate: np.ndarray
    seed: np.ndarray
    params: np.ndarray  # (rows, 5) as GRID_AXES
    step: np.ndarray
    metrics: np.ndarray  # (rows, 4) as METRIC_NAMES

    def __len__(self) -> int:
        return len(self.step)

    @property
    def run_id(self) -> np.ndarray:
        return self.cell_index * self.grid.replicates + self.replicate

    def column(self, name: str) -> np.ndarray:
        if name in GRID_AXES:
            return self.params[:, GRID_AXES.index(name)]
        if name in METRIC_NAMES:
            return self.metrics[:, METRIC_NAMES.index(name)]
        if name == "run_id":
            return self.run_id
        return getattr(self, name)

    def final_rows(self) -> np.ndarray:
        return np.flatnonzero(self.step == self.grid.ss)

    def rows(self):
        """Row dicts in table order (slow; for small results and writers)."""
        return self.rows_at(0, len(self))

    def rows_at(self, start: int, stop: int):
        reps = self.grid.replicates
        for k in range(start, stop):
            cell, rep = int(self.cell_index[k]), int(self.replicate[k])
            row = {"run_id": cell * reps + rep, "cell_index": cell,
                   "replicate": rep, "seed": int(self.seed[k])}
            for j, name in enumerate(GRID_AXES):
                v = self.params[k, j]
                row[name] = int(v) if name == "eit" else float(v)
            row["step"] = int(self.step[k])
            for j, name in enumerate(METRIC_NAMES):
                row[name] = float(self.metrics[k, j])
            yield row


class InvariantViolation(AssertionError):
    pass


def verify_history(history: np.ndarray) -> None:
    """Every GL sample in [0,1] and every per-node series non-decreasing."""
    if history.min() < 0.0 or history.max() > 1.0:
        raise InvariantViolation("greening level outside [0,1]")
    if np.any(np.diff(history, axis=0) < 0.0):
        raise InvariantViolation("greening level decreased")


# worker-process state: the shared read-only network
_WORKER = {}


def _init_worker(net, grid, backend, verify):
    _WORKER.update(net=net, grid=grid, backend=backend, verify=verify, nets={})


def _replicate_network(r: int) -> MultilayerNetwork:
    grid, net = _WORKER["grid"], _WORKER["net"]
    if not grid.regenerate_network_per_replicate:
        return net
    nets = _WORKER["nets"]
    if r not in nets:
        cfg = net.config
        nets[r] = assemble_network(cfg.replace(seed=mix_seed(cfg.seed, r)))
    return nets[r]


def _run_cell(job):
    index, params = job
    grid = _WORKER["grid"]
    out = np.empty((grid.replicates, grid.ss + 1, 4))
    seeds = []
    try:
        for r in range(grid.replicates):
            p = params.replace(seed=cell_seed(grid.base_seed, index, r))
            traj = run_simulation(_replicate_network(r), p, record_history=_WORKER["verify"],
                                  backend=_WORKER["backend"])
            if _WORKER["verify"]:
                verify_history(traj.history)
            out[r] = traj.metrics
            seeds.append(p.seed)
    except Exception as exc:
        raise SweepError(index, exc) from exc
    return index, seeds, out


def resolve_network(network) -> MultilayerNetwork:
    if isinstance(network, MultilayerNetwork):
        return network
    if isinstance(network, NetworkConfig):
        return assemble_network(network)
    from .serialize import load_network

    return load_network(network)


def run_sweep(grid: GridSpec, parallelism: int = 1, *, network: MultilayerNetwork | None = None,
              backend: str | None = None, verify_states: bool = False) -> SweepResult:
    """Simulate every (cell, replicate) on one shared network.

    With ``verify_states`` each run records its full GL history and is
    checked for boundedness and per-node monotonicity; a violation aborts
    the sweep with :class:`SweepError` naming the cell.
    """
    if isinstance(grid.replicates, bool) or grid.replicates < 1:
        raise ConfigError("replicates", "positive integer", grid.replicates)
    if int(parallelism) != parallelism or parallelism < 1:
        raise ConfigError("threads", "positive integer", parallelism)
    net = network if network is not None else resolve_network(grid.network)
    cells = enumerate_cells(grid)
    jobs = list(enumerate(cells))
    n_cells, reps, n_steps = len(cells), grid.replicates, grid.ss + 1

    metrics = np.empty((n_cells, reps, n_steps, 4))
    seeds = np.empty((n_cells, reps), dtype=np.uint64)
    initargs = (net, grid, backend, verify_states)
    if parallelism == 1:
        _init_worker(*initargs)
        results = map(_run_cell, jobs)
        for index, s, out in results:
            metrics[index] = out
            seeds[index] = s
    else:
        chunk = max(1, n_cells // (parallelism * 8))
        with ProcessPoolExecutor(max_workers=parallelism, initializer=_init_worker,
                                 initargs=initargs) as pool:
            for index, s, out in pool.map(_run_cell, jobs, chunksize=chunk):
                metrics[index] = out
                seeds[index] = s

    cell_params = np.array([[getattr(c, a) for a in GRID_AXES] for c in cells], dtype=np.float64)
    cell_ix = np.repeat(np.arange(n_cells), reps * n_steps)
    return SweepResult(
        grid=grid,
        cell_index=cell_ix,
        replicate=np.tile(np.repeat(np.arange(reps), n_steps), n_cells),
        seed=np.repeat(seeds.ravel(), n_steps),
        params=cell_params[cell_ix],
        step=np.tile(np.arange(n_steps), n_cells * reps),
        metrics=metrics.reshape(-1, 4),
    )


@dataclass(frozen=True)
class AggregateRow:
    key: tuple  # values of the group-by parameters, in group-by order
    n: int
    final_mean: float
    final_std: float
    final_sem: float
    step_mean: np.ndarray
    step_std: np.ndarray


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def aggregate(result: SweepResult, group_by: Sequence[str] = (),
              metric: str = "avg_gl_companies") -> list[AggregateRow]:
    """Mean and sample std of ``metric`` per group, pooling cells and replicates.

    Each (cell, replicate) run counts once. Groups are sorted by key.
    """
    for g in group_by:
        if g not in GRID_AXES:
            raise ConfigError("group_by", f"subset of {GRID_AXES}", g)
    n_steps = result.grid.ss + 1
    series = result.column(metric).reshape(-1, n_steps)
    run_params = result.params[::n_steps]
    cols = [GRID_AXES.index(g) for g in group_by]
    keys = [tuple(row) for row in run_params[:, cols].tolist()] if cols else [()] * len(series)

    groups: dict[tuple, list[int]] = {}
    for i, k in enumerate(keys):
        groups.setdefault(k, []).append(i)

    out = []
    for key in sorted(groups):
        idx = groups[key]
        block = series[idx]
        mean, std = _mean_std(block[:, -1].tolist())
        n = len(idx)
        step_mean = np.array([math.fsum(c) / n for c in block.T.tolist()])
        step_std = block.std(axis=0, ddof=1) if n > 1 else np.zeros(n_steps)
        out.append(AggregateRow(key=key, n=n, final_mean=mean, final_std=std,
                                final_sem=std / math.sqrt(n), step_mean=step_mean,
                                step_std=step_std))
    return out
