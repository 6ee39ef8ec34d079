"""Synthetic bank-company multilayer networks.

Three edge sets are generated from one seed:

* bank layer: Chung-Lu style fitness graph with weights proportional to
  bank assets, calibrated to a target mean degree;
* interlayer: every firm borrows from ``lambda_f`` distinct banks chosen
  proportionally to assets (without replacement);
* company layer: Barabasi-Albert preferential attachment with firms added
  in decreasing size order.

Bank assets follow a truncated Pareto law.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError
from .rng import make_rng, mix_seed

STAGE_ASSETS = 0
STAGE_BANK_LAYER = 1
STAGE_INTERLAYER = 2
STAGE_COMPANY_LAYER = 3

SELECTORS = ("bank", "bank_inter", "firm", "firm_inter")


@dataclass(frozen=True)
class NetworkConfig:
    n_banks: int = 250
    n_firms: int = 10000
    pareto_shape: float = 2.0
    pareto_min: float = 1.0
    pareto_truncation_ratio: float = 100.0
    theta_bar: float = 0.8
    lambda_f: int = 2
    bank_mean_degree: float = 10.0
    ba_m: int = 3
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if int(self.n_banks) != self.n_banks or self.n_banks < 2:
            raise ConfigError("n_banks", "integer >= 2", self.n_banks)
        if int(self.n_firms) != self.n_firms or self.n_firms < 1:
            raise ConfigError("n_firms", "integer >= 1", self.n_firms)
        if not self.pareto_shape > 0:
            raise ConfigError("pareto_shape", "> 0", self.pareto_shape)
        if not self.pareto_min > 0:
            raise ConfigError("pareto_min", "> 0", self.pareto_min)
        if not self.pareto_truncation_ratio > 1:
            raise ConfigError("pareto_truncation_ratio", "> 1", self.pareto_truncation_ratio)
        if not 0 < self.theta_bar <= 1:
            raise ConfigError("theta_bar", "(0,1]", self.theta_bar)
        if int(self.lambda_f) != self.lambda_f or not 1 <= self.lambda_f <= self.n_banks:
            raise ConfigError("lambda_f", "integer in [1, n_banks]", self.lambda_f)
        if not self.bank_mean_degree > 0:
            raise ConfigError("bank_mean_degree", "> 0", self.bank_mean_degree)
        if int(self.ba_m) != self.ba_m or not 1 <= self.ba_m < self.n_firms:
            raise ConfigError("ba_m", "integer in [1, n_firms)", self.ba_m)
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "64-bit unsigned integer", self.seed)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class BankProfile:
    assets: float
    external_assets: float
    interbank_assets: float
    interbank_liabilities: float
    net_worth: float


def _as_edge_array(edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(arr) == 0:
        return arr
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    return np.ascontiguousarray(arr[order])


def _csr(rows: np.ndarray, cols: np.ndarray, n_rows: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((cols, rows))
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=indptr[1:])
    return indptr, np.ascontiguousarray(cols[order], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class MultilayerNetwork:
    """Immutable three-edge-set graph.

    Banks and firms live in separate id spaces (``0..n_banks-1`` and
    ``0..n_firms-1``). Bank-layer and company-layer edges are stored with
    ``i < j``; interlayer edges as ``(bank, firm)``. All edge arrays are
    sorted lexicographically.
    """

    config: NetworkConfig
    bank_edges: np.ndarray
    firm_edges: np.ndarray
    interlayer_edges: np.ndarray
    assets: np.ndarray
    firm_sizes: np.ndarray
    bank_degree: np.ndarray = field(init=False)
    firm_degree: np.ndarray = field(init=False)
    bank_inter_degree: np.ndarray = field(init=False)
    firm_inter_degree: np.ndarray = field(init=False)

    def __post_init__(self):
        set_ = object.__setattr__
        for name in ("bank_edges", "firm_edges", "interlayer_edges"):
            set_(self, name, _as_edge_array(getattr(self, name)))
        set_(self, "assets", np.asarray(self.assets, dtype=np.float64))
        set_(self, "firm_sizes", np.asarray(self.firm_sizes, dtype=np.float64))
        nb, nf = self.n_banks, self.n_firms
        set_(self, "bank_degree", np.bincount(self.bank_edges.ravel(), minlength=nb))
        set_(self, "firm_degree", np.bincount(self.firm_edges.ravel(), minlength=nf))
        set_(self, "bank_inter_degree", np.bincount(self.interlayer_edges[:, 0], minlength=nb))
        set_(self, "firm_inter_degree", np.bincount(self.interlayer_edges[:, 1], minlength=nf))
        for arr in (self.bank_edges, self.firm_edges, self.interlayer_edges, self.assets,
                    self.firm_sizes, self.bank_degree, self.firm_degree,
                    self.bank_inter_degree, self.firm_inter_degree):
            arr.setflags(write=False)

    @property
    def n_banks(self) -> int:
        return self.config.n_banks

    @property
    def n_firms(self) -> int:
        return self.config.n_firms

    @property
    def n_nodes(self) -> int:
        return self.n_banks + self.n_firms

    @cached_property
    def bank_profiles(self) -> list[BankProfile]:
        return build_bank_profiles(self.assets, self.config)

    def neighbors(self, selector: str) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, indices)`` of the neighbourhoods for one selector.

        ``bank``: banks -> bank neighbours; ``bank_inter``: banks -> firm
        neighbours; ``firm``: firms -> firm neighbours; ``firm_inter``:
        firms -> bank neighbours. Neighbour ids are local to their kind and
        sorted ascending.
        """
        return self._adjacency[selector]

    def neighbor_degrees(self, selector: str) -> np.ndarray:
        """Degrees of the *neighbour* kind within the selector's edge set."""
        return {
            "bank": self.bank_degree,
            "bank_inter": self.firm_inter_degree,
            "firm": self.firm_degree,
            "firm_inter": self.bank_inter_degree,
        }[selector]

    @cached_property
    def _adjacency(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        be, fe, ie = self.bank_edges, self.firm_edges, self.interlayer_edges
        nb, nf = self.n_banks, self.n_firms
        sym = lambda e: (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))
        return {
            "bank": _csr(*sym(be), nb),
            "bank_inter": _csr(ie[:, 0], ie[:, 1], nb),
            "firm": _csr(*sym(fe), nf),
            "firm_inter": _csr(ie[:, 1], ie[:, 0], nf),
        }

    @cached_property
    def diffusion_plan(self):
        from .kernel import build_plan

        return build_plan(self)

    def loan_sizes(self) -> np.ndarray:
        """Loan carried by each interlayer edge, aligned with ``interlayer_edges``."""
        cfg = self.config
        banks = self.interlayer_edges[:, 0]
        return cfg.theta_bar * self.assets[banks] * cfg.n_banks / cfg.n_firms

    def __eq__(self, other):
        if not isinstance(other, MultilayerNetwork):
            return NotImplemented
        return (self.config == other.config
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("bank_edges", "firm_edges", "interlayer_edges",
                                  "assets", "firm_sizes")))

    __hash__ = None


def truncated_pareto_mean(shape: float, xmin: float, ratio: float) -> float:
    """Mean of a Pareto(shape, xmin) truncated to ``[xmin, xmin * ratio]``."""
    xmax = xmin * ratio
    norm = 1.0 - ratio ** (-shape)
    if shape == 1.0:
        return xmin * np.log(ratio) / norm
    return shape * xmin**shape * (xmin ** (1 - shape) - xmax ** (1 - shape)) / ((shape - 1) * norm)


def generate_bank_assets(cfg: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    # inverse CDF of the truncated law: F(x) = (1 - (m/x)^a) / (1 - r^-a)
    u = rng.random(cfg.n_banks)
    tail = 1.0 - cfg.pareto_truncation_ratio ** (-cfg.pareto_shape)
    assets = cfg.pareto_min * (1.0 - u * tail) ** (-1.0 / cfg.pareto_shape)
    return np.clip(assets, cfg.pareto_min, cfg.pareto_min * cfg.pareto_truncation_ratio)


def build_bank_profiles(assets, cfg: NetworkConfig) -> list[BankProfile]:
    profiles = []
    for a in np.asarray(assets, dtype=np.float64).tolist():
        if not a > 0:
            raise ConfigError("assets", "> 0", a)
        # one of the two subtractions is exact (Sterbenz), so external +
        # interbank == a holds in floating point, not just approximately
        interbank = a - cfg.theta_bar * a
        external = a - interbank
        profiles.append(BankProfile(
            assets=a,
            external_assets=external,
            interbank_assets=interbank,
            interbank_liabilities=interbank,
            net_worth=a - interbank,
        ))
    return profiles


def calibrate_bank_layer(weights: np.ndarray, target_mean_degree: float) -> float:
    """Constant ``C`` with ``(2/n) sum_{i<j} min(1, C w_i w_j) == target``."""
    n = len(weights)
    if not 0 < target_mean_degree <= n - 1:
        raise ConfigError("bank_mean_degree", f"in (0, n_banks - 1] = (0, {n - 1}]",
                          target_mean_degree)
    iu, ju = np.triu_indices(n, k=1)
    prod = weights[iu] * weights[ju]
    c_full = 1.0 / prod.min()
    if target_mean_degree == n - 1:
        return c_full

    def excess(c):
        return 2.0 * np.minimum(1.0, c * prod).sum() / n - target_mean_degree

    return brentq(excess, 0.0, c_full, xtol=1e-14 * c_full, rtol=1e-15)


def bank_link_probabilities(profiles, cfg: NetworkConfig) -> np.ndarray:
    """Upper-triangle link probabilities in ``np.triu_indices(n, 1)`` order."""
    assets = np.array([p.assets for p in profiles])
    w = assets / assets.sum()
    c = calibrate_bank_layer(w, cfg.bank_mean_degree)
    iu, ju = np.triu_indices(len(assets), k=1)
    return np.minimum(1.0, c * w[iu] * w[ju])


def generate_bank_layer(profiles, cfg: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    n = len(profiles)
    if n < 2:
        raise ConfigError("n_banks", ">= 2", n)
    p = bank_link_probabilities(profiles, cfg)
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(len(p)) < p
    return np.column_stack([iu[hit], ju[hit]]).astype(np.int64)


def generate_interlayer(assets, cfg: NetworkConfig,
                        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Firm-to-bank loan links and the resulting firm sizes.

    Each firm picks ``lambda_f`` distinct banks by successive sampling
    proportional to assets (Efraimidis-Spirakis keys ``log(u) / A_i``).
    """
    assets = np.asarray(assets, dtype=np.float64)
    nb, nf, k = cfg.n_banks, cfg.n_firms, cfg.lambda_f
    if len(assets) != nb:
        raise ConfigError("assets", f"length n_banks = {nb}", len(assets))
    if k > nb:
        raise ConfigError("lambda_f", "<= n_banks", k)
    with np.errstate(divide="ignore"):
        keys = np.log(rng.random((nf, nb))) / assets
    if k == nb:
        chosen = np.broadcast_to(np.arange(nb), (nf, nb))
    else:
        chosen = np.argpartition(-keys, k - 1, axis=1)[:, :k]
    chosen = np.sort(chosen, axis=1)

    loans = cfg.theta_bar * assets[chosen] * nb / nf
    # column-by-column so the sum order is fixed (ascending bank id)
    sizes = loans[:, 0].copy()
    for c in range(1, k):
        sizes += loans[:, c]

    firms = np.repeat(np.arange(nf), k)
    edges = np.column_stack([chosen.ravel(), firms]).astype(np.int64)
    return _as_edge_array(edges), sizes


def firm_entry_order(firm_sizes) -> np.ndarray:
    """Firm ids by decreasing size, ties by ascending id."""
    sizes = np.asarray(firm_sizes, dtype=np.float64)
    return np.lexsort((np.arange(len(sizes)), -sizes))


def generate_company_layer(firm_sizes, cfg: NetworkConfig,
                           rng: np.random.Generator) -> np.ndarray:
    m = cfg.ba_m
    n = len(firm_sizes)
    if n <= m:
        raise ConfigError("n_firms", f"> ba_m = {m}", n)
    order = firm_entry_order(firm_sizes).tolist()

    edges = []
    targets_pool = []  # node ids repeated once per incident edge
    seed_nodes = order[: m + 1]
    for a in range(m + 1):
        for b in range(a + 1, m + 1):
            u, v = seed_nodes[a], seed_nodes[b]
            edges.append((min(u, v), max(u, v)))
            targets_pool.append(seed_nodes[a])
            targets_pool.append(seed_nodes[b])

    buf = rng.random(4096)
    pos = 0
    for new in order[m + 1:]:
        picked = []
        size = len(targets_pool)
        while len(picked) < m:
            if pos == len(buf):
                buf = rng.random(4096)
                pos = 0
            t = targets_pool[int(buf[pos] * size)]
            pos += 1
            if t not in picked:
                picked.append(t)
        for t in picked:
            edges.append((min(new, t), max(new, t)))
            targets_pool.append(t)
        targets_pool.extend([new] * m)
    return np.array(edges, dtype=np.int64)


def assemble_network(cfg: NetworkConfig) -> MultilayerNetwork:
    cfg.validate()
    stage_rng = lambda stage: make_rng(mix_seed(cfg.seed, stage))
    assets = generate_bank_assets(cfg, stage_rng(STAGE_ASSETS))
    profiles = build_bank_profiles(assets, cfg)
    bank_edges = generate_bank_layer(profiles, cfg, stage_rng(STAGE_BANK_LAYER))
    inter_edges, firm_sizes = generate_interlayer(assets, cfg, stage_rng(STAGE_INTERLAYER))
    firm_edges = generate_company_layer(firm_sizes, cfg, stage_rng(STAGE_COMPANY_LAYER))
    return MultilayerNetwork(
        config=cfg,
        bank_edges=bank_edges,
        firm_edges=firm_edges,
        interlayer_edges=inter_edges,
        assets=assets,
        firm_sizes=firm_sizes,
    )


def check_network(net: MultilayerNetwork) -> list[str]:
    """Return a list of violated invariants (empty when the network is valid)."""
    problems = []
    cfg = net.config
    for name, edges, n_a, n_b, ordered in (
        ("bank_edges", net.bank_edges, cfg.n_banks, cfg.n_banks, True),
        ("firm_edges", net.firm_edges, cfg.n_firms, cfg.n_firms, True),
        ("interlayer_edges", net.interlayer_edges, cfg.n_banks, cfg.n_firms, False),
    ):
        if len(edges) == 0:
            continue
        if edges.min() < 0 or edges[:, 0].max() >= n_a or edges[:, 1].max() >= n_b:
            problems.append(f"{name}: node id out of range")
        if ordered and np.any(edges[:, 0] >= edges[:, 1]):
            problems.append(f"{name}: self-loop or unordered pair")
        if len(np.unique(edges, axis=0)) != len(edges):
            problems.append(f"{name}: duplicate edges")
    if np.any(net.firm_inter_degree != cfg.lambda_f):
        problems.append("interlayer: firm degree differs from lambda_f")
    if len(net.assets) != cfg.n_banks or np.any(net.assets <= 0):
        problems.append("assets: wrong length or non-positive")
    if len(net.firm_sizes) != cfg.n_firms or np.any(net.firm_sizes <= 0):
        problems.append("firm_sizes: wrong length or non-positive")
    else:
        loans = net.loan_sizes()
        sums = np.zeros(cfg.n_firms)
        for (b, f), loan in zip(net.interlayer_edges.tolist(), loans.tolist()):
            sums[f] += loan
        if not np.array_equal(sums, net.firm_sizes):
            problems.append("firm_sizes: not equal to summed loan sizes")
    return problems
