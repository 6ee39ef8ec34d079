"""Aggregate observables of a greening-level vector."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

METRIC_NAMES = (
    "avg_gl_companies",
    "avg_gl_banks",
    "frac_influenced_companies",
    "frac_influenced_banks",
)


@dataclass(frozen=True)
class StepMetrics:
    step: int
    avg_gl_companies: float
    avg_gl_banks: float
    frac_influenced_companies: float
    frac_influenced_banks: float

    def values(self) -> tuple[float, float, float, float]:
        return (self.avg_gl_companies, self.avg_gl_banks,
                self.frac_influenced_companies, self.frac_influenced_banks)


def compute_step_metrics(state, net, influenced_above: float = 0.0) -> StepMetrics:
    """Means over firms and banks plus the share of nodes with ``gl > influenced_above``.

    ``state`` is a :class:`~greenspread.engine.SimulationState` or a bare
    vector laid out banks first, then firms. Sums are correctly rounded
    (``math.fsum``), so the result does not depend on summation order.
    """
    gl = np.asarray(getattr(state, "gl", state), dtype=np.float64)
    step = getattr(state, "step", 0)
    nb = net.n_banks
    banks, firms = gl[:nb], gl[nb:]
    return StepMetrics(
        step=int(step),
        avg_gl_companies=math.fsum(firms.tolist()) / len(firms),
        avg_gl_banks=math.fsum(banks.tolist()) / len(banks),
        frac_influenced_companies=np.count_nonzero(firms > influenced_above) / len(firms),
        frac_influenced_banks=np.count_nonzero(banks > influenced_above) / len(banks),
    )


def metrics_from_array(rows: np.ndarray) -> list[StepMetrics]:
    return [StepMetrics(i, *map(float, r)) for i, r in enumerate(rows)]


def is_monotone(series) -> bool:
    a = np.asarray(series)
    return bool(np.all(a[1:] >= a[:-1]))
