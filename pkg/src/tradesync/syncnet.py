"""Activity-synchronization network: pairwise cross-correlation of investor
activity over overlapping active periods, with a shuffle-based significance
filter.

This is the O(N^2 * shuffles) hot path. Pairs are scheduled over a process
pool; every pair draws its permutations from an RNG stream derived from
(seed, i, j), so the network is identical for any worker count and any
execution order.
"""

from __future__ import annotations

import bisect
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .activity import ActivitySeries
from .errors import DegenerateInputError
from .parallel import chunked, resolve_workers, task_rng

# Cap on elements per permutation block; a pair's block layout depends only on
# its window length, never on the worker count, to keep runs reproducible.
_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class OverlapWindow:
    """Calendar ordinals [start, end] where two investors are both inside
    their active spans."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class SyncEdge:
    i: str
    j: str
    rho: float
    overlap: int
    pvalue: float


@dataclass(frozen=True)
class NodeAttrs:
    total_ops: int
    n_active: int
    span: int
    opd: float
    rho_ov: float | None = None


@dataclass
class SyncNetwork:
    """Undirected simple graph of investors; edges are the pair correlations
    that survived the significance filter. Isolated nodes stay in the node
    set (they are only dropped for display purposes downstream)."""

    ticker: str
    node_ids: list[str]
    node_attrs: dict[str, NodeAttrs]
    edges: list[SyncEdge]
    diagnostics: dict = field(default_factory=dict)

    def degree(self) -> dict[str, int]:
        deg = {n: 0 for n in self.node_ids}
        for e in self.edges:
            deg[e.i] += 1
            deg[e.j] += 1
        return deg

    def isolated_nodes(self) -> list[str]:
        deg = self.degree()
        return [n for n in self.node_ids if deg[n] == 0]

    def edge_index_pairs(self) -> list[tuple[int, int]]:
        """Edges as index pairs into node_ids (sorted order)."""
        pos = {n: k for k, n in enumerate(self.node_ids)}
        return [(pos[e.i], pos[e.j]) for e in self.edges]


@dataclass(frozen=True)
class PairStat:
    """Outcome for one tested node pair (indices into the eligible node list)."""

    i: int
    j: int
    status: str  # ok | disjoint | short | degenerate
    rho: float | None = None
    pvalue: float | None = None
    overlap: int = 0
    kept: bool = False


def overlap_window(a: ActivitySeries, b: ActivitySeries) -> OverlapWindow | None:
    start = max(a.first_day, b.first_day)
    end = min(a.last_day, b.last_day)
    if start > end:
        return None
    return OverlapWindow(start, end)


def window_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Population-normalized cross-correlation of two same-length windows."""
    n = x.size
    if n != y.size or n < 2:
        raise DegenerateInputError("windows must have equal length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(np.mean(xc * xc))
    vy = float(np.mean(yc * yc))
    if vx == 0.0 or vy == 0.0:
        raise DegenerateInputError("constant activity over the overlap window")
    rho = float(np.mean(xc * yc)) / float(np.sqrt(vx * vy))
    # guard against ulp-level overshoot so |rho| <= 1 holds exactly
    return min(1.0, max(-1.0, rho))


def cross_correlation(a: ActivitySeries, b: ActivitySeries, w: OverlapWindow) -> float:
    x = a.window(w.start, w.end).astype(float)
    y = b.window(w.start, w.end).astype(float)
    return window_correlation(x, y)


def _shuffle_exceed_count(x: np.ndarray, y: np.ndarray, shuffles: int,
                          rng: np.random.Generator, permute: str) -> int:
    """Number of shuffle replicas whose correlation reaches the observed one.

    Permutations leave window means and sigmas unchanged, so comparing raw
    dot products is equivalent to comparing correlations and avoids any
    per-replica normalization error.
    """
    s0 = float(np.dot(x, y))
    n = x.size
    block = max(1, min(shuffles, _BLOCK_ELEMENTS // max(n, 1)))
    count = 0
    done = 0
    while done < shuffles:
        rows = min(block, shuffles - done)
        xs = np.tile(x, (rows, 1))
        rng.permuted(xs, axis=1, out=xs)
        if permute == "both":
            ys = np.tile(y, (rows, 1))
            rng.permuted(ys, axis=1, out=ys)
            sums = np.einsum("ij,ij->i", xs, ys)
        else:
            sums = xs @ y
        count += int(np.count_nonzero(sums >= s0))
        done += rows
    return count


def permutation_pvalue(x: np.ndarray, y: np.ndarray, shuffles: int,
                       rng: np.random.Generator, permute: str = "both") -> float:
    """One-sided permutation p-value for the correlation of two windows.

    Each replica re-permutes the day sequence of both windows (or of one,
    with permute='single'); p = (1 + #{rho_shuffled >= rho}) / (shuffles + 1).
    """
    if shuffles < 99:
        raise ValueError("need at least 99 shuffles for a meaningful p-value")
    if permute not in ("both", "single"):
        raise ValueError(f"unknown permute mode {permute!r}")
    count = _shuffle_exceed_count(np.asarray(x, float), np.asarray(y, float),
                                  shuffles, rng, permute)
    return (1 + count) / (shuffles + 1)


def permutation_filter(a: ActivitySeries, b: ActivitySeries, w: OverlapWindow,
                       rho: float, shuffles: int = 999, level: float = 0.01,
                       seed: int = 0, permute: str = "both") -> tuple[float, bool]:
    """Significance filter for one pair; keep means p-value below `level`.

    `rho` is accepted (rather than recomputed) so callers can reuse the value
    they already have; it does not enter the null comparison, which works on
    the windows directly.
    """
    del rho
    x = a.window(w.start, w.end).astype(float)
    y = b.window(w.start, w.end).astype(float)
    pvalue = permutation_pvalue(x, y, shuffles, task_rng(seed), permute)
    return pvalue, pvalue < level


# ---------------------------------------------------------------------------
# parallel pair evaluation

_PAYLOAD: dict = {}


def _set_payload(payload: dict) -> None:
    global _PAYLOAD
    _PAYLOAD = payload


def _pair_at(p: int, cum: list[int]) -> tuple[int, int]:
    """Decode flat pair index p into (i, j), i < j, using cumulative row sizes."""
    i = bisect.bisect_right(cum, p) - 1
    j = i + 1 + (p - cum[i])
    return i, j


def _eval_pair(ia: int, ib: int, payload: dict) -> PairStat:
    series: list[ActivitySeries] = payload["series"]
    a, b = series[ia], series[ib]
    w = overlap_window(a, b)
    if w is None:
        return PairStat(ia, ib, "disjoint")
    if w.length < 2:
        return PairStat(ia, ib, "short", overlap=w.length)
    x = a.window(w.start, w.end).astype(float)
    y = b.window(w.start, w.end).astype(float)
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(np.mean(xc * xc))
    vy = float(np.mean(yc * yc))
    if vx == 0.0 or vy == 0.0:
        return PairStat(ia, ib, "degenerate", overlap=w.length)
    rho = min(1.0, max(-1.0, float(np.mean(xc * yc)) / float(np.sqrt(vx * vy))))
    rng = task_rng(payload["seed"], ia, ib)
    count = _shuffle_exceed_count(x, y, payload["shuffles"], rng, payload["permute"])
    pvalue = (1 + count) / (payload["shuffles"] + 1)
    return PairStat(ia, ib, "ok", rho=rho, pvalue=pvalue, overlap=w.length,
                    kept=pvalue < payload["level"])


def _eval_chunk(spec) -> tuple[list[PairStat], dict]:
    kind, arg = spec
    payload = _PAYLOAD
    counters = {"disjoint": 0, "short": 0, "degenerate": 0, "tested": 0,
                "kept": 0, "negative_rho": 0}
    out: list[PairStat] = []
    keep_all = payload["keep_all"]
    if kind == "range":
        start, stop = arg
        indices = ((_pair_at(p, payload["cum"])) for p in range(start, stop))
    else:
        indices = iter(arg)
    for ia, ib in indices:
        st = _eval_pair(ia, ib, payload)
        if st.status == "ok":
            counters["tested"] += 1
            if st.rho is not None and st.rho < 0:
                counters["negative_rho"] += 1
            if st.kept:
                counters["kept"] += 1
            if keep_all or st.kept:
                out.append(st)
        else:
            counters[st.status] += 1
            if keep_all:
                out.append(st)
    return out, counters


def _run_chunks(payload: dict, chunks: list, workers: int
                ) -> tuple[list[PairStat], dict]:
    results: list[PairStat] = []
    counters = {"disjoint": 0, "short": 0, "degenerate": 0, "tested": 0,
                "kept": 0, "negative_rho": 0}
    if workers == 1:
        _set_payload(payload)
        parts = map(_eval_chunk, chunks)
        for stats, c in parts:
            results.extend(stats)
            for k, v in c.items():
                counters[k] += v
        _set_payload({})
        return results, counters
    with ProcessPoolExecutor(max_workers=workers, initializer=_set_payload,
                             initargs=(payload,)) as pool:
        for stats, c in pool.map(_eval_chunk, chunks):
            results.extend(stats)
            for k, v in c.items():
                counters[k] += v
    return results, counters


def evaluate_pairs(series: list[ActivitySeries], pairs: list[tuple[int, int]],
                   shuffles: int = 999, level: float = 0.01, seed: int = 0,
                   workers: int | None = None, permute: str = "both"
                   ) -> tuple[list[PairStat], dict]:
    """Correlate and significance-test an explicit list of (unique) index pairs.

    Returns one PairStat per input pair (in input order) plus a counter
    summary. The RNG stream of a pair depends only on (seed, i, j).
    """
    workers = resolve_workers(workers)
    payload = {"series": series, "seed": seed, "shuffles": shuffles,
               "level": level, "permute": permute, "keep_all": True, "cum": None}
    chunks = [("list", c) for c in chunked(list(pairs), workers * 8)]
    results, counters = _run_chunks(payload, chunks, workers)
    order = {pair: k for k, pair in enumerate(pairs)}
    results.sort(key=lambda st: order[(st.i, st.j)])
    return results, counters


def build_sync_network(series: dict[str, ActivitySeries], min_ops: int = 20,
                       shuffles: int = 999, level: float = 0.01, seed: int = 0,
                       workers: int | None = None, permute: str = "both"
                       ) -> SyncNetwork:
    """Build the synchronization network for one asset.

    Nodes are investors with at least `min_ops` operations; an edge is kept
    when the pair's one-sided permutation p-value is below `level`. Pairs
    with window length < 2 or zero variance produce no edge and are only
    counted in the diagnostics.
    """
    tickers = {s.ticker for s in series.values()}
    if len(tickers) > 1:
        raise ValueError(f"series from multiple assets: {sorted(tickers)}")
    ticker = tickers.pop() if tickers else ""

    node_ids = sorted(inv for inv, s in series.items() if s.total_ops >= min_ops)
    slist = [series[inv] for inv in node_ids]
    n = len(node_ids)
    n_pairs = n * (n - 1) // 2
    workers = resolve_workers(workers)

    # cumulative flat-index offsets of each row of the (i < j) triangle
    cum = [0] * n
    for i in range(1, n):
        cum[i] = cum[i - 1] + (n - i)

    payload = {"series": slist, "seed": seed, "shuffles": shuffles,
               "level": level, "permute": permute, "keep_all": False, "cum": cum}
    bounds = np.linspace(0, n_pairs, num=min(n_pairs, workers * 8) + 1, dtype=int)
    chunks = [("range", (int(a), int(b))) for a, b in zip(bounds, bounds[1:]) if a < b]
    results, counters = _run_chunks(payload, chunks, workers)
    results.sort(key=lambda st: (st.i, st.j))

    edges = [SyncEdge(i=node_ids[st.i], j=node_ids[st.j], rho=st.rho,
                      overlap=st.overlap, pvalue=st.pvalue)
             for st in results if st.kept]
    attrs = {inv: NodeAttrs(total_ops=series[inv].total_ops,
                            n_active=series[inv].n_active,
                            span=series[inv].span,
                            opd=series[inv].opd)
             for inv in node_ids}
    diagnostics = {
        "pairs_total": n_pairs,
        "pairs_disjoint": counters["disjoint"],
        "pairs_short_overlap": counters["short"],
        "pairs_degenerate": counters["degenerate"],
        "pairs_tested": counters["tested"],
        "pairs_negative_rho": counters["negative_rho"],
        "edges_retained": counters["kept"],
        "nodes": n,
        "min_ops": min_ops,
        "shuffles": shuffles,
        "level": level,
        "permute": permute,
    }
    net = SyncNetwork(ticker=ticker, node_ids=node_ids, node_attrs=attrs,
                      edges=edges, diagnostics=diagnostics)
    net.diagnostics["isolated_nodes"] = len(net.isolated_nodes())
    return net


def with_node_scores(net: SyncNetwork, scores: dict[str, float]) -> SyncNetwork:
    """Copy of the network with rho_ov set on the scored nodes."""
    attrs = {
        inv: replace(a, rho_ov=scores.get(inv)) for inv, a in net.node_attrs.items()
    }
    return SyncNetwork(ticker=net.ticker, node_ids=list(net.node_ids),
                       node_attrs=attrs, edges=list(net.edges),
                       diagnostics=dict(net.diagnostics))


def write_edges(net: SyncNetwork, stream) -> None:
    stream.write("i\tj\trho\toverlap\tpvalue\n")
    for e in net.edges:
        stream.write(f"{e.i}\t{e.j}\t{e.rho!r}\t{e.overlap}\t{e.pvalue!r}\n")


def write_nodes(net: SyncNetwork, stream) -> None:
    stream.write("investor\ttotal_ops\tN\tT\topd\n")
    for inv in net.node_ids:
        a = net.node_attrs[inv]
        stream.write(f"{inv}\t{a.total_ops}\t{a.n_active}\t{a.span}\t{a.opd!r}\n")
