"""Hot loop of the spreading process with a compiled and a numpy backend.

The compiled extension ``greenspread._ckernel`` is used when importable;
``greenspread._pykernel`` is the fallback. Set ``GREENSPREAD_BACKEND=python``
to force the fallback. Both backends produce bitwise-identical results:
neighbour sums run sequentially in CSR order, increments are applied the
same way, and aggregate sums are correctly rounded.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _pykernel

_compiled = None
if os.environ.get("GREENSPREAD_BACKEND", "").lower() != "python":
    try:
        from . import _ckernel as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKENDS = ("python",) + (("compiled",) if _compiled is not None else ())
DEFAULT_BACKEND = "compiled" if _compiled is not None else "python"

# metric columns produced by simulate()
AVG_COMPANIES, AVG_BANKS, FRAC_COMPANIES, FRAC_BANKS = range(4)


@dataclass(frozen=True, eq=False)
class DiffusionPlan:
    """The four diffusion passes flattened into one CSR structure.

    Row ``r`` evaluates ``L = sum(weights * gl[indices]) / den[r]`` over its
    neighbour slice and, when ``L > lt``, adds one pending increment to node
    ``target[r]``. Node ids are global: banks first, then firms.
    """

    n_banks: int
    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    den: np.ndarray
    target: np.ndarray
    pass_rows: tuple  # (start, stop) row range of each pass

    @cached_property
    def ell(self):
        return _pykernel.build_ell(self)


def build_plan(net, passes=("bank", "bank_inter", "firm", "firm_inter")) -> DiffusionPlan:
    nb = net.n_banks
    offsets = {"bank": (0, 0), "bank_inter": (0, nb), "firm": (nb, nb), "firm_inter": (nb, 0)}
    indptrs, indices, weights, dens, targets, ranges = [], [], [], [], [], []
    nnz = 0
    rows = 0
    for sel in passes:
        target_off, nbr_off = offsets[sel]
        ptr, idx = net.neighbors(sel)
        deg = net.neighbor_degrees(sel).astype(np.float64)
        w = deg[idx]
        n_rows = len(ptr) - 1
        indptrs.append(ptr[:-1] + nnz)
        indices.append(idx + nbr_off)
        weights.append(w)
        # integer-valued, so the sum is exact regardless of order
        row_of = np.repeat(np.arange(n_rows), np.diff(ptr))
        dens.append(np.bincount(row_of, weights=w, minlength=n_rows))
        targets.append(np.arange(n_rows) + target_off)
        ranges.append((rows, rows + n_rows))
        nnz += len(idx)
        rows += n_rows
    indptrs.append(np.array([nnz]))
    cat = lambda xs, dt: np.ascontiguousarray(np.concatenate(xs), dtype=dt)
    return DiffusionPlan(
        n_banks=nb,
        n_nodes=net.n_nodes,
        indptr=cat(indptrs, np.int64),
        indices=cat(indices, np.int64),
        weights=cat(weights, np.float64),
        den=cat(dens, np.float64),
        target=cat(targets, np.int64),
        pass_rows=tuple(ranges),
    )


def simulate(plan: DiffusionPlan, gl: np.ndarray, influenced: np.ndarray,
             alpha_draws: np.ndarray, alpha: float, delta: float, lt: float,
             ss: int, eit: int, influenced_above: float = 0.0,
             record_history: bool = False, backend: str | None = None):
    """Run ``ss`` steps from ``gl`` (modified in place).

    ``alpha_draws[s, q]`` is the uniform variate for influenced bank ``q``
    at step ``s``; shape ``(min(eit, ss), len(influenced))``.

    Returns ``(metrics, history)`` where ``metrics`` has shape ``(ss+1, 4)``
    (see the column constants above) and ``history`` is ``(ss+1, n_nodes)``
    or ``None``.
    """
    backend = backend or DEFAULT_BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        impl = _compiled
    elif backend == "python":
        impl = _pykernel
    else:
        raise ValueError(f"unknown backend {backend!r}")
    n_steps_influenced = min(eit, ss)
    alpha_draws = np.ascontiguousarray(alpha_draws, dtype=np.float64).reshape(
        n_steps_influenced, len(influenced))
    return impl.simulate(plan, gl, np.ascontiguousarray(influenced, dtype=np.int64),
                         alpha_draws, float(alpha), float(delta), float(lt),
                         int(ss), int(eit), float(influenced_above), bool(record_history))
