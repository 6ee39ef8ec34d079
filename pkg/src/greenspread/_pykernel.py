"""numpy backend of :func:`greenspread.kernel.simulate`.

Row sums are evaluated ELL-style: rows sorted by length, then one vector
add per neighbour position. That keeps the accumulation order of every
row identical to a plain sequential loop, which the compiled backend uses.
"""

from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np


def build_ell(plan):
    lengths = np.diff(plan.indptr)
    order = np.argsort(-lengths, kind="stable")
    sorted_len = lengths[order]
    starts = plan.indptr[:-1][order]
    cols = []
    max_len = int(sorted_len[0]) if len(sorted_len) else 0
    for c in range(max_len):
        n_active = int(np.count_nonzero(sorted_len > c))
        k = starts[:n_active] + c
        cols.append((n_active, plan.weights[k], plan.indices[k]))
    n_nonempty = int(np.count_nonzero(sorted_len))
    return SimpleNamespace(
        cols=cols,
        n_rows=len(order),
        n_nonempty=n_nonempty,
        den=plan.den[order][:n_nonempty],
        target=plan.target[order][:n_nonempty],
    )


def _metrics(gl, n_banks, above, out):
    firms = gl[n_banks:]
    banks = gl[:n_banks]
    out[0] = math.fsum(firms.tolist()) / len(firms)
    out[1] = math.fsum(banks.tolist()) / len(banks)
    out[2] = np.count_nonzero(firms > above) / len(firms)
    out[3] = np.count_nonzero(banks > above) / len(banks)


def pending_counts(plan, gl, lt):
    ell = plan.ell
    acc = np.zeros(ell.n_rows)
    for n_active, w, idx in ell.cols:
        acc[:n_active] += w * gl[idx]
    hit = acc[: ell.n_nonempty] / ell.den > lt
    return np.bincount(ell.target[hit], minlength=plan.n_nodes)


def simulate(plan, gl, influenced, alpha_draws, alpha, delta, lt, ss, eit,
             influenced_above, record_history):
    nb = plan.n_banks
    metrics = np.zeros((ss + 1, 4))
    history = np.zeros((ss + 1, len(gl))) if record_history else None
    _metrics(gl, nb, influenced_above, metrics[0])
    if history is not None:
        history[0] = gl

    for s in range(ss):
        changed = False
        if s < eit and len(influenced):
            b = influenced[alpha_draws[s] < alpha]
            new = np.minimum(gl[b] + delta, 1.0)
            changed = bool(np.any(new != gl[b]))
            gl[b] = new

        pending = pending_counts(plan, gl, lt)
        mask = pending > 0
        if mask.any():
            new = np.minimum(gl[mask] + pending[mask] * delta, 1.0)
            changed = changed or bool(np.any(new != gl[mask]))
            gl[mask] = new

        if changed:
            _metrics(gl, nb, influenced_above, metrics[s + 1])
        else:
            metrics[s + 1] = metrics[s]
        if history is not None:
            history[s + 1] = gl
        if not changed and s >= eit:
            # no influence left and a fixed point reached: nothing moves again
            metrics[s + 2:] = metrics[s + 1]
            if history is not None:
                history[s + 2:] = gl
            break
    return metrics, history
