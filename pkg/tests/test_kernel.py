import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greenspread import BACKENDS, NetworkConfig, SpreadParams, assemble_network, run_simulation
from greenspread import kernel
from greenspread.metrics import compute_step_metrics
from strategies import params as param_strategy, tiny_networks

needs_compiled = pytest.mark.skipif("compiled" not in BACKENDS,
                                    reason="compiled kernel not built")


def test_default_backend_prefers_compiled():
    assert kernel.DEFAULT_BACKEND == ("compiled" if "compiled" in BACKENDS else "python")


def test_unknown_backend(desk_net):
    with pytest.raises(ValueError):
        run_simulation(desk_net, SpreadParams(ss=1), backend="fortran")


def test_metrics_agree_with_fsum_metrics(desk_net, backend):
    p = SpreadParams(alpha=0.1, delta=0.05, eip=0.75, eit=8, lt=0.1, ss=60, seed=4)
    traj = run_simulation(desk_net, p, record_history=True, backend=backend)
    for k, gl in enumerate(traj.history):
        assert compute_step_metrics(gl, desk_net).values() == tuple(traj.metrics[k])


@needs_compiled
class TestCompiledMatchesPython:
    @settings(max_examples=150, deadline=None)
    @given(tiny_networks(), param_strategy)
    def test_tiny(self, net, p):
        a = run_simulation(net, p, record_history=True, backend="compiled")
        b = run_simulation(net, p, record_history=True, backend="python")
        assert np.array_equal(a.history, b.history)
        assert np.array_equal(a.metrics, b.metrics)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32), param_strategy)
    def test_desk_scale(self, seed, p):
        net = assemble_network(NetworkConfig(n_banks=25, n_firms=1000, seed=seed))
        a = run_simulation(net, p, record_history=True, backend="compiled")
        b = run_simulation(net, p, record_history=True, backend="python")
        assert np.array_equal(a.history, b.history)
        assert np.array_equal(a.metrics, b.metrics)

    def test_full_scale(self, full_net):
        for p in (SpreadParams(alpha=0.05, delta=0.1, eip=0.5, eit=10, lt=0.15, seed=8),
                  SpreadParams(alpha=0.1, delta=0.05, eip=0.25, eit=15, lt=0.1, seed=9)):
            a = run_simulation(full_net, p, backend="compiled")
            b = run_simulation(full_net, p, backend="python")
            assert np.array_equal(a.metrics, b.metrics)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0) | st.sampled_from([1e-300, 5e-324, 1.0, 0.1, 1 / 3]),
                    min_size=4, max_size=60))
    def test_exact_sum_is_correctly_rounded(self, values):
        # drive the compiled fsum through metrics: one bank, the rest firms
        gl = np.array([0.0] + values)
        plan = kernel.DiffusionPlan(
            n_banks=1, n_nodes=len(gl), indptr=np.zeros(1, dtype=np.int64),
            indices=np.zeros(0, dtype=np.int64), weights=np.zeros(0), den=np.zeros(0),
            target=np.zeros(0, dtype=np.int64), pass_rows=())
        m, _ = kernel.simulate(plan, gl.copy(), np.zeros(0, dtype=np.int64), np.zeros((0, 0)),
                               0.0, 0.0, 0.0, 0, 0, backend="compiled")
        assert m[0, 0] == math.fsum(values) / len(values)


def test_early_exit_fills_tail(desk_net, backend):
    # everything saturates quickly; remaining rows must equal the fixed point
    p = SpreadParams(alpha=1.0, delta=0.1, eip=1.0, eit=2, lt=0.05, ss=100, seed=0)
    traj = run_simulation(desk_net, p, record_history=True, backend=backend)
    last = np.flatnonzero(np.any(np.diff(traj.history, axis=0) != 0, axis=1)).max() + 1
    assert last < 60
    assert np.all(traj.history[last:] == traj.history[-1])
    assert np.all(traj.metrics[last:] == traj.metrics[-1])


def test_no_influenced_banks(desk_net, backend):
    p = SpreadParams(eip=0.0, eit=5, ss=10)
    assert not run_simulation(desk_net, p, backend=backend).metrics.any()
