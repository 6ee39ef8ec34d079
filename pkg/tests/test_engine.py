import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

import oracle
from conftest import DESK, hand_network
from greenspread import (ConfigError, MultilayerNetwork, NetworkConfig, SpreadParams,
                         assemble_network, run_simulation)
from greenspread.engine import (
    PASSES,
    SimulationState,
    diffusion_substeps,
    external_influence_substep,
    init_state,
    neighbor_influence,
    step,
)
from greenspread.rng import make_rng
from strategies import params as param_strategy, tiny_networks

# hand trace of hand_network(), alpha=1, delta=0.1, eip=1, lt=0.05; every
# bank (and every firm) moves in lockstep
HAND_TABLE = {
    2: {"banks": [0, .2, .5, .7, .9, 1, 1, 1, 1, 1, 1],
        "firms": [0, .1, .3, .5, .7, .9, 1, 1, 1, 1, 1]},
    1: {"banks": [0, .2, .4, .6, .8, 1, 1, 1, 1, 1, 1],
        "firms": [0, .1, .3, .5, .7, .9, 1, 1, 1, 1, 1]},
    0: {"banks": [0] * 11, "firms": [0] * 11},
}


def weighted_star():
    """Firm 0 has neighbours 1, 2, 3 with company-layer degrees 5, 1, 4."""
    firm_edges = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (1, 6), (1, 7), (3, 8), (3, 9), (3, 10)]
    cfg = NetworkConfig(n_banks=2, n_firms=12, lambda_f=1, bank_mean_degree=1.0, ba_m=1)
    return MultilayerNetwork(config=cfg, bank_edges=[], firm_edges=firm_edges,
                             interlayer_edges=[(0, f) for f in range(12)],
                             assets=[1.0, 1.0], firm_sizes=np.full(12, 0.4 / 12))


def oracle_trace(net, p):
    return oracle.trace(net.n_banks, net.n_firms, net.bank_edges.tolist(),
                        net.firm_edges.tolist(), net.interlayer_edges.tolist(),
                        p.sgl, p.alpha, p.delta, p.eip, p.eit, p.ss, p.lt, p.seed)


def oracle_history(net, p):
    return np.array([b + f for b, f in oracle_trace(net, p)])


class TestParams:
    @pytest.mark.parametrize("field", ["sgl", "alpha", "delta", "eip", "lt"])
    def test_unit_interval(self, field):
        with pytest.raises(ConfigError, match=field):
            SpreadParams(**{field: 1.5})
        with pytest.raises(ConfigError):
            SpreadParams(**{field: -0.1})

    def test_eit_may_exceed_ss(self):
        SpreadParams(eit=50, ss=10)

    @pytest.mark.parametrize("bad", [dict(eit=-1), dict(ss=2.5), dict(seed=-3), dict(seed=2**64)])
    def test_integers(self, bad):
        with pytest.raises(ConfigError):
            SpreadParams(**bad)


class TestInitState:
    def test_all_nodes_start_at_sgl(self, desk_net):
        s = init_state(desk_net, SpreadParams(sgl=0.3), make_rng(0))
        assert np.all(s.gl == 0.3) and s.step == 0 and len(s.gl) == 1025

    def test_certain_inclusion(self, desk_net):
        s = init_state(desk_net, SpreadParams(eip=1.0), make_rng(0))
        assert s.influenced_banks.tolist() == list(range(25))

    def test_certain_exclusion(self, desk_net):
        assert len(init_state(desk_net, SpreadParams(eip=0.0), make_rng(0)).influenced_banks) == 0

    def test_binomial_selection_size(self, full_net):
        sizes = [len(init_state(full_net, SpreadParams(eip=0.25), make_rng(s)).influenced_banks)
                 for s in range(1000)]
        se = math.sqrt(250 * 0.25 * 0.75 / 1000)
        assert abs(np.mean(sizes) - 62.5) < 3 * se

    def test_selection_is_frozen(self, desk_net):
        s = init_state(desk_net, SpreadParams(eip=0.5), make_rng(0))
        with pytest.raises(ValueError):
            s.influenced_banks[0] = 7


class TestNeighborInfluence:
    def test_weights_normalised_by_degree(self):
        net = weighted_star()
        gl = np.zeros(14)
        gl[2 + 1: 2 + 4] = 1.0
        assert neighbor_influence(0, "firm", gl, net) == 1.0

    def test_single_green_neighbour(self):
        net = weighted_star()
        gl = np.zeros(14)
        gl[2 + 1] = 1.0  # the degree-5 neighbour
        assert neighbor_influence(0, "firm", gl, net) == 0.5

    def test_empty_neighbourhood(self):
        net = weighted_star()
        assert neighbor_influence(1, "bank", np.ones(14), net) == 0.0
        assert neighbor_influence(1, "bank_inter", np.ones(14), net) == 0.0

    def test_interlayer_uses_interlayer_degrees(self, hand_net):
        gl = np.zeros(8)
        gl[0] = 1.0  # bank 0, interlayer degree 4; bank 1 has 3
        # firm 0 borrows from banks 0 and 1
        assert neighbor_influence(0, "firm_inter", gl, hand_net) == pytest.approx(4 / 7)
        gl = np.zeros(8)
        gl[3] = 1.0  # firm 0; bank 0's firms 0,1,3,4 all have interlayer degree 2
        assert neighbor_influence(0, "bank_inter", gl, hand_net) == 0.25


class TestExternalInfluence:
    def _state(self, gl, influenced):
        return SimulationState(gl=np.array(gl, dtype=float), influenced_banks=influenced)

    def test_zero_probability(self):
        s = self._state([0.2, 0.3, 0.0], [0, 1])
        external_influence_substep(s, SpreadParams(alpha=0.0, delta=0.1), make_rng(0))
        assert s.gl.tolist() == [0.2, 0.3, 0.0]

    def test_capped(self):
        s = self._state([0.95, 0.0], [0])
        external_influence_substep(s, SpreadParams(alpha=1.0, delta=0.1), make_rng(0))
        assert s.gl[0] == 1.0

    def test_accumulates(self):
        s = self._state([0.0, 0.0], [1])
        p = SpreadParams(alpha=1.0, delta=0.05)
        for _ in range(3):
            external_influence_substep(s, p, make_rng(0))
        assert s.gl[1] == pytest.approx(0.15, abs=1e-15) and s.gl[0] == 0.0


class TestDiffusion:
    def test_nothing_green_nothing_pending(self, desk_net):
        s = SimulationState(gl=np.zeros(1025), influenced_banks=[])
        assert not diffusion_substeps(s, SpreadParams(lt=0.0), desk_net).any()

    @given(st.floats(0, 1))
    @settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    def test_unreachable_threshold(self, desk_net, scale):
        gl = make_rng(1).random(1025) * scale
        gl[:5] = 1.0
        s = SimulationState(gl=gl, influenced_banks=[])
        assert not diffusion_substeps(s, SpreadParams(lt=1.0), desk_net).any()

    def test_increments_stack_across_passes(self):
        cfg = NetworkConfig(n_banks=2, n_firms=2, lambda_f=1, bank_mean_degree=1.0, ba_m=1)
        net = MultilayerNetwork(config=cfg, bank_edges=[(0, 1)], firm_edges=[],
                                interlayer_edges=[(0, 0), (1, 1)], assets=[1.0, 1.0],
                                firm_sizes=[0.8, 0.8])
        gl = np.array([0.0, 1.0, 1.0, 0.0])  # bank 1 green, firm 0 green
        s = SimulationState(gl=gl.copy(), influenced_banks=[])
        pending = diffusion_substeps(s, SpreadParams(lt=0.5), net)
        assert pending[0] == 2  # bank 0: one from its bank, one from its firm
        assert pending.tolist() == [2, 0, 0, 1]
        assert np.array_equal(s.gl, gl)

    @pytest.mark.parametrize("seed", range(5))
    def test_pass_order_is_irrelevant(self, desk_net, seed):
        import itertools

        gl = make_rng(seed).random(1025) * 0.4
        s = SimulationState(gl=gl, influenced_banks=[])
        p = SpreadParams(lt=0.15)
        ref = diffusion_substeps(s, p, desk_net)
        assert ref.any()
        for order in itertools.permutations(PASSES):
            assert np.array_equal(diffusion_substeps(s, p, desk_net, order), ref)


class TestStep:
    @pytest.mark.parametrize("eit", [0, 1, 2])
    def test_hand_table(self, hand_net, eit):
        p = SpreadParams(alpha=1.0, delta=0.1, eip=1.0, eit=eit, lt=0.05, ss=10)
        rng = make_rng(p.seed)
        s = init_state(hand_net, p, rng)
        rows = [s.gl.copy()]
        for _ in range(10):
            rows.append(step(s, p, hand_net, rng).gl.copy())
        rows = np.array(rows)
        expect = HAND_TABLE[eit]
        for k in range(11):
            assert rows[k, :3] == pytest.approx([expect["banks"][k]] * 3, abs=1e-12)
            assert rows[k, 3:] == pytest.approx([expect["firms"][k]] * 5, abs=1e-12)
        assert np.array_equal(rows, oracle_history(hand_net, p))
        assert s.step == 10

    @pytest.mark.parametrize("null", [dict(eit=0), dict(delta=0.0)])
    def test_no_source_no_change(self, desk_net, null):
        p = SpreadParams(**{**dict(alpha=1.0, delta=0.1, eip=1.0, eit=5, lt=0.05, ss=20), **null})
        traj = run_simulation(desk_net, p, record_history=True)
        assert not traj.history.any()

    def test_stepwise_api_matches_run_simulation(self, desk_net):
        p = SpreadParams(alpha=0.1, delta=0.1, eip=0.5, eit=6, lt=0.1, ss=30, seed=77)
        rng = make_rng(p.seed)
        s = init_state(desk_net, p, rng)
        hist = [s.gl.copy()]
        for _ in range(p.ss):
            hist.append(step(s, p, desk_net, rng).gl.copy())
        traj = run_simulation(desk_net, p, record_history=True)
        assert np.array_equal(np.array(hist), traj.history)
        assert traj.history[-1].any()


class TestRunSimulation:
    def test_zero_steps(self, desk_net):
        traj = run_simulation(desk_net, SpreadParams(ss=0))
        assert len(traj) == 1 and traj.metrics.tolist() == [[0.0] * 4]

    def test_deterministic(self, desk_net):
        p = SpreadParams(alpha=0.05, eip=0.5, eit=7, lt=0.1, seed=5)
        a, b = run_simulation(desk_net, p), run_simulation(desk_net, p)
        assert np.array_equal(a.metrics, b.metrics)
        assert np.array_equal(a.influenced_banks, b.influenced_banks)

    def test_trajectory_length_and_echo(self, desk_net):
        p = SpreadParams(ss=17, seed=3)
        traj = run_simulation(desk_net, p)
        assert len(traj) == 18 and len(traj.steps) == 18
        assert traj.seed == 3 and traj.params == p
        assert traj.steps[4].step == 4

    def test_strong_influence_saturates_companies(self, full_net):
        p = SpreadParams(alpha=1.0, delta=0.1, eip=1.0, eit=15, lt=0.05, ss=100, seed=1)
        assert run_simulation(full_net, p).final.avg_gl_companies >= 0.9


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(tiny_networks(), param_strategy)
    def test_oracle_equivalence(self, net, p):
        traj = run_simulation(net, p, record_history=True)
        assert np.array_equal(traj.history, oracle_history(net, p))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32), param_strategy)
    def test_bounded_and_monotone(self, seed, p):
        net = assemble_network(NetworkConfig(n_banks=5, n_firms=60, bank_mean_degree=2.0,
                                             seed=seed))
        h = run_simulation(net, p, record_history=True).history
        assert h.min() >= 0.0 and h.max() <= 1.0
        assert np.all(np.diff(h, axis=0) >= 0.0)

    @settings(max_examples=40, deadline=None)
    @given(tiny_networks(), param_strategy)
    def test_unreachable_threshold_only_moves_influenced_banks(self, net, p):
        p = p.replace(lt=1.0, sgl=0.0)
        traj = run_simulation(net, p, record_history=True)
        moved = np.flatnonzero(traj.history[-1] > 0)
        assert set(moved.tolist()) <= set(traj.influenced_banks.tolist())

    @pytest.mark.parametrize("null", [dict(eit=0), dict(alpha=0.0), dict(delta=0.0), dict(eip=0.0)])
    def test_null_sources(self, desk_net, null):
        for seed in range(10):
            p = SpreadParams(**{**dict(alpha=0.5, delta=0.1, eip=1.0, eit=15, lt=0.0, ss=40,
                                       sgl=0.0, seed=seed), **null})
            assert not run_simulation(desk_net, p, record_history=True).history.any()


def _mean_final(net, seeds=range(30), **kw):
    base = dict(alpha=0.05, delta=0.05, eip=0.5, eit=5, lt=0.15, ss=100)
    base.update(kw)
    vals = [run_simulation(net, SpreadParams(**base, seed=s)).final.avg_gl_companies
            for s in seeds]
    return np.mean(vals), np.std(vals, ddof=1) / math.sqrt(len(vals))


@pytest.mark.parametrize("name,values,direction", [
    ("alpha", [0.02, 0.05, 0.1, 0.3], 1),
    ("delta", [0.05, 0.1, 0.2], 1),
    ("eip", [0.25, 0.5, 0.75, 1.0], 1),
    ("eit", [1, 3, 6, 10, 15], 1),
    ("lt", [0.05, 0.1, 0.15, 0.2, 0.25], -1),
])
def test_stochastic_monotonicity(desk_net, name, values, direction):
    stats = [_mean_final(desk_net, **{name: v}) for v in values]
    for (m0, s0), (m1, s1) in zip(stats, stats[1:]):
        assert direction * (m1 - m0) >= -2 * math.hypot(s0, s1)
