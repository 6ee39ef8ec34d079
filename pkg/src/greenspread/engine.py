"""Threshold spreading of greening levels with external influence on banks.

One iteration:

1. every externally influenced bank gets one Bernoulli(alpha) attempt; a
   success raises its GL by delta immediately (capped at 1);
2. four passes are evaluated against that post-influence vector: banks via
   the bank layer, banks via their firms, firms via the company layer and
   firms via their banks. A node whose degree-weighted neighbour GL
   strictly exceeds ``lt`` earns one pending delta per pass;
3. pending increments are applied together, capped at 1.

Node ids in GL vectors are global: banks ``0..n_banks-1`` followed by firms.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import _pykernel, kernel
from .errors import ConfigError
from .metrics import METRIC_NAMES, StepMetrics, metrics_from_array
from .rng import make_rng

PASSES = ("bank", "bank_inter", "firm", "firm_inter")


@dataclass(frozen=True)
class SpreadParams:
    sgl: float = 0.0
    alpha: float = 0.1
    delta: float = 0.1
    eip: float = 1.0
    eit: int = 1
    ss: int = 100
    lt: float = 0.05
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("sgl", "alpha", "delta", "eip", "lt"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0.0 <= v <= 1.0:
                raise ConfigError(name, "[0,1]", v)
        for name in ("eit", "ss"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise ConfigError(name, "non-negative integer", v)
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "64-bit unsigned integer", self.seed)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "SpreadParams":
        return dataclasses.replace(self, **changes)


@dataclass
class SimulationState:
    gl: np.ndarray
    influenced_banks: np.ndarray
    step: int = 0

    def __post_init__(self):
        self.influenced_banks = np.asarray(self.influenced_banks, dtype=np.int64)
        self.influenced_banks.setflags(write=False)


@dataclass
class Trajectory:
    params: SpreadParams
    metrics: np.ndarray  # (ss+1, 4), columns as METRIC_NAMES
    influenced_banks: np.ndarray
    history: np.ndarray | None = field(default=None, repr=False)

    @property
    def seed(self) -> int:
        return self.params.seed

    def __len__(self) -> int:
        return len(self.metrics)

    @property
    def steps(self) -> list[StepMetrics]:
        return metrics_from_array(self.metrics)

    def series(self, name: str) -> np.ndarray:
        return self.metrics[:, METRIC_NAMES.index(name)]

    @property
    def final(self) -> StepMetrics:
        return self.steps[-1]


def init_state(net, params: SpreadParams, rng: np.random.Generator) -> SimulationState:
    gl = np.full(net.n_nodes, float(params.sgl))
    # one draw per bank, ascending id; random() < 1 always, < 0 never
    selected = np.flatnonzero(rng.random(net.n_banks) < params.eip)
    return SimulationState(gl=gl, influenced_banks=selected, step=0)


def neighbor_influence(v: int, selector: str, state, net) -> float:
    """Degree-weighted mean GL of ``v``'s neighbours in one edge set.

    ``selector`` is one of ``bank`` (bank layer), ``bank_inter`` (a bank's
    firms), ``firm`` (company layer) or ``firm_inter`` (a firm's banks);
    ``v`` is the bank or firm id local to its kind. Weights are neighbour
    degrees within the same edge set, normalised over the neighbourhood.
    """
    gl = getattr(state, "gl", state)
    ptr, idx = net.neighbors(selector)
    deg = net.neighbor_degrees(selector)
    offset = net.n_banks if selector in ("bank_inter", "firm") else 0
    num = 0.0
    den = 0.0
    for j in idx[ptr[v]:ptr[v + 1]].tolist():
        w = float(deg[j])
        num = num + w * float(gl[j + offset])
        den += w
    if den == 0.0:
        return 0.0
    return num / den


def external_influence_substep(state: SimulationState, params: SpreadParams,
                               rng: np.random.Generator) -> None:
    draws = rng.random(len(state.influenced_banks))
    gl = state.gl
    for b, u in zip(state.influenced_banks.tolist(), draws.tolist()):
        if u < params.alpha:
            gl[b] = min(1.0, gl[b] + params.delta)


def diffusion_substeps(state: SimulationState, params: SpreadParams, net,
                       pass_order=PASSES) -> np.ndarray:
    """Pending increment counts (in units of delta) per node; ``state`` is untouched."""
    plan = net.diffusion_plan if tuple(pass_order) == PASSES else kernel.build_plan(net, pass_order)
    return _pykernel.pending_counts(plan, state.gl, params.lt)


def step(state: SimulationState, params: SpreadParams, net,
         rng: np.random.Generator) -> SimulationState:
    if state.step < params.eit:
        external_influence_substep(state, params, rng)
    pending = diffusion_substeps(state, params, net)
    mask = pending > 0
    state.gl[mask] = np.minimum(state.gl[mask] + pending[mask] * params.delta, 1.0)
    state.step += 1
    return state


def run_simulation(net, params: SpreadParams, record_history: bool = False,
                   backend: str | None = None, influenced_above: float = 0.0) -> Trajectory:
    rng = make_rng(params.seed)
    state = init_state(net, params, rng)
    draws = rng.random((min(params.eit, params.ss), len(state.influenced_banks)))
    metrics, history = kernel.simulate(
        net.diffusion_plan, state.gl, state.influenced_banks, draws,
        params.alpha, params.delta, params.lt, params.ss, params.eit,
        influenced_above=influenced_above, record_history=record_history,
        backend=backend,
    )
    return Trajectory(params=params, metrics=metrics,
                      influenced_banks=state.influenced_banks, history=history)
