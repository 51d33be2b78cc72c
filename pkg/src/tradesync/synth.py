"""Synthetic market generator with planted, known parameters.

Agents draw a Pareto base rate (heavy-tailed activity), volatility follows an
exponential AR(1) process, and each agent's daily operation count is Poisson
with intensity lambda_i * max(0, 1 + beta_i * z(t)) where z is standardized
volatility. Optional communities share a binary on/off activity gate. The
emitted trades and quotes use exactly the file formats the ingest module
consumes, and a truth record keeps every planted quantity for recovery tests.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, GenerationError
from .ingest import QuoteSeries, TradeRecord, write_quotes, write_trades
from .netmetrics import assortativity_from_matrix, mixing_matrix_from_pairs
from .syncnet import NodeAttrs, SyncEdge, SyncNetwork


@dataclass(frozen=True)
class Ar1Config:
    """AR(1) process for log-volatility: x_t = mean + phi*(x_{t-1} - mean) + sigma*eps."""

    mean: float = math.log(0.02)
    phi: float = 0.7
    sigma: float = 0.3


@dataclass(frozen=True)
class CommunitySpec:
    size: int
    coupling: float = 1.0


@dataclass(frozen=True)
class SynthConfig:
    n_agents: int
    n_days: int
    activity_tail_alpha: float = 1.0
    beta_mean: float = 0.0
    beta_sd: float = 0.2
    vol: Ar1Config = field(default_factory=Ar1Config)
    communities: tuple[CommunitySpec, ...] = ()
    seed: int = 0
    ticker: str = "SYN"
    base_rate_scale: float = 0.02
    rate_cap: float = 50.0
    gate_on_prob: float = 0.5
    community_min_rate: float = 1.0
    start_price: float = 100.0

    def __post_init__(self):
        if self.n_agents < 2:
            raise GenerationError("need at least 2 agents")
        if self.n_days < 30:
            raise GenerationError("need at least 30 days")
        if not 0.0 <= self.vol.phi < 1.0:
            raise GenerationError("phi must lie in [0, 1)")
        if self.vol.sigma <= 0:
            raise GenerationError("sigma must be positive")
        if self.activity_tail_alpha <= 0:
            raise GenerationError("activity_tail_alpha must be positive")
        if self.base_rate_scale <= 0:
            raise GenerationError("base_rate_scale must be positive")
        if not 0.0 < self.gate_on_prob < 1.0:
            raise GenerationError("gate_on_prob must lie in (0, 1)")
        if sum(c.size for c in self.communities) > self.n_agents:
            raise GenerationError("community sizes exceed the agent count")
        for c in self.communities:
            if c.size < 2:
                raise GenerationError("a community needs at least 2 members")
            if not 0.0 < c.coupling <= 1.0:
                raise GenerationError("coupling must lie in (0, 1]")


@dataclass(frozen=True)
class SynthTruth:
    """Planted quantities; emitted next to the data, never consumed by the
    analysis pipeline."""

    lambdas: np.ndarray
    betas: np.ndarray
    community: np.ndarray  # label per agent, -1 for none
    nu: np.ndarray

    def as_dict(self) -> dict:
        return {
            "lambda": [float(v) for v in self.lambdas],
            "beta": [float(v) for v in self.betas],
            "community": [int(v) for v in self.community],
            "nu": [float(v) for v in self.nu],
        }


@dataclass
class SynthResult:
    trades: list[TradeRecord]
    quotes: QuoteSeries
    truth: SynthTruth


def agent_id(i: int) -> str:
    return f"A{i:05d}"


def _weekday_calendar(n_days: int, start: dt.date = dt.date(2000, 1, 3)) -> list[dt.date]:
    days = []
    d = start
    while len(days) < n_days:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def generate(config: SynthConfig) -> SynthResult:
    """Generate one asset's trades, quotes and truth. Deterministic: the whole
    output is a fixed function of the config (single RNG stream, fixed draw
    order)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed)]))
    n, t = config.n_agents, config.n_days

    lambdas = config.base_rate_scale * (1.0 + rng.pareto(config.activity_tail_alpha, n))
    np.minimum(lambdas, config.rate_cap, out=lambdas)
    betas = rng.normal(config.beta_mean, config.beta_sd, n)

    labels = np.full(n, -1, dtype=np.int64)
    next_agent = 0
    for ci, spec in enumerate(config.communities):
        labels[next_agent:next_agent + spec.size] = ci
        # guarantee members are active enough to pass downstream filters
        lambdas[next_agent:next_agent + spec.size] = np.maximum(
            lambdas[next_agent:next_agent + spec.size], config.community_min_rate)
        next_agent += spec.size

    eps = rng.standard_normal(t)
    x = np.empty(t)
    stat_sd = config.vol.sigma / math.sqrt(1.0 - config.vol.phi ** 2)
    x[0] = config.vol.mean + stat_sd * eps[0]
    for k in range(1, t):
        x[k] = config.vol.mean + config.vol.phi * (x[k - 1] - config.vol.mean) \
            + config.vol.sigma * eps[k]
    nu = np.exp(x)
    sd_nu = nu.std()
    if sd_nu == 0.0:
        raise GenerationError("volatility process is constant")
    z = (nu - nu.mean()) / sd_nu

    intensity = lambdas[:, None] * np.clip(1.0 + betas[:, None] * z[None, :], 0.0, None)
    for ci, spec in enumerate(config.communities):
        gate = rng.random(t) < config.gate_on_prob
        factor = (1.0 - spec.coupling) + spec.coupling * gate / config.gate_on_prob
        members = labels == ci
        intensity[members] *= factor[None, :]
    if not np.any(intensity > 0):
        raise GenerationError("all intensities are zero; adjust beta or coupling")

    counts = rng.poisson(intensity)

    days = _weekday_calendar(t)
    rets = rng.normal(0.0, 0.005, t - 1)
    open_ = config.start_price * np.exp(np.concatenate([[0.0], np.cumsum(rets)]))
    u = rng.uniform(0.02, 0.98, t)
    high = open_ * (1.0 + nu * u)
    low = high - open_ * nu
    if np.any(low <= 0):
        raise GenerationError("volatility too large for positive low prices")
    quotes = QuoteSeries(ticker=config.ticker, days=days,
                         open_=open_.tolist(), high=high.tolist(), low=low.tolist())

    agent_rows, day_rows = np.nonzero(counts)
    reps = counts[agent_rows, day_rows]
    trade_agents = np.repeat(agent_rows, reps)
    trade_days = np.repeat(day_rows, reps)
    n_trades = trade_agents.size
    shares = rng.integers(1, 1000, size=n_trades)
    price_frac = rng.random(n_trades)
    sides = rng.integers(0, 2, size=n_trades)

    lo = low[trade_days]
    prices = lo + (high[trade_days] - lo) * price_frac
    ids = [agent_id(i) for i in range(n)]
    trades = [
        TradeRecord(
            investor_id=ids[a],
            date=days[d],
            ticker=config.ticker,
            shares=int(s),
            price=float(p),
            side="buy" if b else "sell",
        )
        for a, d, s, p, b in zip(trade_agents.tolist(), trade_days.tolist(),
                                 shares.tolist(), prices.tolist(), sides.tolist())
    ]
    truth = SynthTruth(lambdas=lambdas, betas=betas, community=labels, nu=nu)
    return SynthResult(trades=trades, quotes=quotes, truth=truth)


def write_synth(result: SynthResult, out_dir: str) -> dict[str, str]:
    """Write trades.csv, quotes.csv and truth.json; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "trades": os.path.join(out_dir, "trades.csv"),
        "quotes": os.path.join(out_dir, "quotes.csv"),
        "truth": os.path.join(out_dir, "truth.json"),
    }
    with open(paths["trades"], "w") as f:
        write_trades(result.trades, f)
    with open(paths["quotes"], "w") as f:
        write_quotes(result.quotes, f)
    with open(paths["truth"], "w") as f:
        json.dump(result.truth.as_dict(), f, sort_keys=True)
        f.write("\n")
    return paths


# ---------------------------------------------------------------------------
# planted-assortativity fixture

def _fixture_network(n_nodes: int, edges: list[tuple[int, int]]) -> SyncNetwork:
    ids = [f"P{i:04d}" for i in range(n_nodes)]
    attrs = {i: NodeAttrs(total_ops=0, n_active=0, span=0, opd=0.0) for i in ids}
    edge_list = [SyncEdge(i=ids[a], j=ids[b], rho=1.0, overlap=1, pvalue=0.001)
                 for a, b in sorted(edges)]
    return SyncNetwork(ticker="FIXTURE", node_ids=ids, node_attrs=attrs,
                       edges=edge_list)


def _edge_r(edges: list[tuple[int, int]], scores: np.ndarray) -> float | None:
    """Assortativity of an edge list, or None while it is undefined (all edge
    endpoints carrying one value, as can happen in a random start)."""
    pairs = np.asarray(edges, dtype=np.int64)
    try:
        return assortativity_from_matrix(
            mixing_matrix_from_pairs(scores[pairs[:, 0]], scores[pairs[:, 1]]))
    except DegenerateInputError:
        return None


def plant_assortative_network(n_nodes: int, target_r: float, attributes,
                              seed: int = 0, tolerance: float = 0.02,
                              mean_degree: float = 6.0,
                              max_steps: int = 40000) -> SyncNetwork:
    """Wire a network whose attribute assortativity lands within `tolerance`
    of target_r, by greedy edge rewiring from a random start.

    Targets of exactly +-1 are unreachable this way (use disjoint monochrome
    cliques or a complete bipartite fixture for those); raises when the
    target cannot be reached within max_steps."""
    scores = np.asarray(list(attributes), dtype=np.int64)
    if scores.size != n_nodes:
        raise GenerationError("need one attribute value per node")
    if np.unique(scores).size < 2:
        raise GenerationError("need at least 2 distinct attribute values")
    if not -1.0 < target_r < 1.0:
        raise GenerationError("target_r must lie strictly inside (-1, 1)")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
    m = max(2, int(round(mean_degree * n_nodes / 2)))

    edge_list: list[tuple[int, int]] = []
    edge_set: set[tuple[int, int]] = set()
    while len(edge_list) < m:
        a, b = rng.integers(0, n_nodes, size=2)
        if a == b:
            continue
        e = (min(int(a), int(b)), max(int(a), int(b)))
        if e not in edge_set:
            edge_set.add(e)
            edge_list.append(e)

    by_value: dict[int, np.ndarray] = {
        int(v): np.flatnonzero(scores == v) for v in np.unique(scores)
    }
    values = sorted(by_value)
    r = _edge_r(edge_list, scores)
    for _ in range(max_steps):
        if r is not None and abs(r - target_r) <= tolerance:
            return _fixture_network(n_nodes, edge_list)
        drop_idx = int(rng.integers(0, m))
        drop = edge_list[drop_idx]
        if r is None or r < target_r:
            # push upward: connect two nodes sharing an attribute value
            v = values[int(rng.integers(0, len(values)))]
            group = by_value[v]
            if group.size < 2:
                continue
            a, b = group[rng.integers(0, group.size, size=2)]
        else:
            a, b = rng.integers(0, n_nodes, size=2)
        a, b = int(a), int(b)
        if a == b:
            continue
        add = (min(a, b), max(a, b))
        if add in edge_set:
            continue
        edge_list[drop_idx] = add
        r_new = _edge_r(edge_list, scores)
        accept = r_new is not None and (
            r is None or abs(r_new - target_r) < abs(r - target_r))
        if accept:
            edge_set.discard(drop)
            edge_set.add(add)
            r = r_new
        else:
            edge_list[drop_idx] = drop
    raise GenerationError(
        f"could not reach assortativity {target_r} within {max_steps} steps "
        f"(last r = {r})")
