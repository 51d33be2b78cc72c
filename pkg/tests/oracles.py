"""Independent brute-force evaluators used as oracles by the test suite.

Everything here is written as plain loops over the defining formulas, kept
deliberately separate from the library's vectorized implementations.
"""

import math


def bruteforce_pair_correlation(x, y):
    """Pairwise activity correlation over a shared window: population
    normalization (divide by the window length), means and sigmas over the
    window."""
    n = len(x)
    assert n == len(y) and n >= 2
    mx = sum(x) / n
    my = sum(y) / n
    sx = math.sqrt(sum((v - mx) ** 2 for v in x) / n)
    sy = math.sqrt(sum((v - my) ** 2 for v in y) / n)
    assert sx > 0 and sy > 0
    total = 0.0
    for xi, yi in zip(x, y):
        total += (xi - mx) * (yi - my) / (sx * sy)
    return total / n


def bruteforce_activity_vol_correlation(ops, nu):
    """Investor-level activity/volatility correlation over the investor's
    trading days (both inputs already restricted to those days)."""
    return bruteforce_pair_correlation(ops, nu)


def bruteforce_hill(values, k):
    """Hill tail-index estimate from first principles."""
    xs = sorted(values, reverse=True)
    assert 0 < k < len(xs)
    total = 0.0
    for j in range(k):
        total += math.log(xs[j] / xs[k])
    return k / total


def endpoint_assortativity(edges, score):
    """Assortativity as a direct covariance over the 2|E| ordered edge
    endpoints; algebraically equal to the mixing-matrix form."""
    xs = []
    ys = []
    for i, j in edges:
        xs.append(score[i])
        ys.append(score[j])
        xs.append(score[j])
        ys.append(score[i])
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(xs, ys)) / n
    vx = sum((a - mx) ** 2 for a in xs) / n
    vy = sum((b - my) ** 2 for b in ys) / n
    assert vx > 0 and vy > 0
    return cov / math.sqrt(vx * vy)


def two_clique_modularity(clique_size):
    """Closed-form Q for two disjoint equal cliques under the correct split:
    each clique holds half the edge weight and half the total degree, so
    Q = 2 * (1/2 - (1/2)^2) = 1/2 for any size."""
    del clique_size
    return 0.5


def trailing_ma_residual(series, window):
    out = []
    for t in range(window - 1, len(series)):
        ma = sum(series[t - window + 1:t + 1]) / window
        out.append(series[t] - ma)
    return out


def least_squares_slope(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = sum((x - mx) ** 2 for x in xs)
    return num / den
