"""Convergence and distribution diagnostics for mixed linear/circular chains.

Circular parameters are reduced to signed angular deviations from their
pooled circular mean before the standard machinery (autocovariance, ESS,
split R-hat) is applied. R-hat follows the rank-normalized split formulation
associated with the 1.01 convergence threshold; the plain split variant is
reported alongside for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import stats

from .draws import DrawSet
from .errors import DegenerateTraceError, UndefinedMeanError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ParameterTrace:
    """Per-chain value sequences for one scalar parameter."""

    values: np.ndarray  # (chains, draws)
    kind: Literal["linear", "circular"] = "linear"

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise ValueError("trace values must be (chains, draws)")

    @property
    def n_chains(self) -> int:
        return self.values.shape[0]

    @property
    def n_draws(self) -> int:
        return self.values.shape[1]


def circular_mean(angles) -> float:
    """Direction of the mean resultant vector; errors when it nearly vanishes."""
    angles = np.asarray(angles, dtype=float)
    if angles.size == 0:
        raise ValueError("circular mean of an empty sequence")
    s, c = np.mean(np.sin(angles)), np.mean(np.cos(angles))
    if np.hypot(s, c) < 1e-12:
        raise UndefinedMeanError("resultant vector is too short to define a mean")
    return float(np.arctan2(s, c))


def center_trace(trace: ParameterTrace) -> ParameterTrace:
    """Reduce a circular trace to deviations from its pooled circular mean.

    Deviations are signed angles in (-pi, pi]; linear traces pass through
    unchanged. The result is rotation-invariant, making standard R-hat/ESS
    machinery applicable.
    """
    if trace.kind == "linear":
        return trace
    mean = circular_mean(trace.values.ravel())
    dev = (trace.values - mean) % TWO_PI
    dev = np.where(dev > np.pi, dev - TWO_PI, dev)
    return ParameterTrace(dev, kind="linear")


def _chain_autocov(x: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """Biased autocovariance of one chain at the requested lags."""
    s = len(x)
    xc = x - x.mean()
    return np.array([np.dot(xc[: s - lag], xc[lag:]) / s for lag in lags])


def normalized_autocovariance(trace: ParameterTrace, max_lag: int) -> np.ndarray:
    """Autocovariance normalized by lag 0, averaged over chains.

    Circular traces are centered first. Lag 0 is exactly 1.
    """
    trace = center_trace(trace)
    if trace.n_draws <= max_lag:
        raise ValueError("max_lag must be smaller than the chain length")
    lags = np.arange(max_lag + 1)
    rhos = []
    for chain in trace.values:
        acov = _chain_autocov(chain, lags)
        if acov[0] <= 0:
            raise DegenerateTraceError("zero-variance chain")
        rhos.append(acov / acov[0])
    out = np.mean(rhos, axis=0)
    out[0] = 1.0
    return out


def effective_sample_size(trace: ParameterTrace, *, max_lag: int | None = None) -> float:
    """ESS via Geyer's initial monotone positive sequence on paired lags.

    S_eff = chains*draws / (1 + 2 * sum of retained autocorrelations), with
    the multi-chain between/within variance correction. Lags are evaluated
    lazily until the paired sums turn nonpositive.
    """
    trace = center_trace(trace)
    m, s = trace.n_chains, trace.n_draws
    if m < 2 and s < 100:
        raise ValueError("need at least 2 chains or 100 draws")
    if s < 4:
        raise ValueError("chains too short for ESS")
    values = trace.values
    centered = values - values.mean(axis=1, keepdims=True)
    w_biased = float(np.einsum("mi,mi->", centered, centered)) / (m * s)
    w = w_biased * s / (s - 1)
    if w <= 0 or not np.isfinite(w):
        raise DegenerateTraceError("zero within-chain variance")
    if m >= 2:
        b = s * float(np.var(values.mean(axis=1), ddof=1))
        var_plus = (s - 1) / s * w + b / s
    else:
        var_plus = (s - 1) / s * w

    def rho(lag: int) -> float:
        if lag == 0:
            acov = w_biased
        else:
            acov = float(np.einsum("mi,mi->", centered[:, : s - lag],
                                   centered[:, lag:])) / (m * s)
        return 1.0 - (w - acov) / var_plus

    limit = s - 1 if max_lag is None else min(max_lag, s - 1)
    tau_pairs = 0.0
    prev = np.inf
    k = 0
    while 2 * k + 1 <= limit:
        pair = rho(2 * k) + rho(2 * k + 1)
        if pair <= 0:
            break
        pair = min(pair, prev)  # enforce monotone non-increasing pairs
        tau_pairs += 2.0 * pair
        prev = pair
        k += 1
    tau = max(tau_pairs - 1.0, 1.0 / np.log10(max(s, 10.0)))
    return float(m * s / tau)


def _split_chains(values: np.ndarray) -> np.ndarray:
    m, s = values.shape
    half = s // 2
    if half < 2:
        raise ValueError("need at least 4 draws per chain to split")
    return np.concatenate([values[:, :half], values[:, s - half:]], axis=0)


def _rank_normalize(values: np.ndarray) -> np.ndarray:
    """Pooled fractional ranks mapped through the inverse normal CDF."""
    flat = values.ravel()
    ranks = stats.rankdata(flat, method="average")
    z = stats.norm.ppf((ranks - 0.375) / (flat.size + 0.25))
    return z.reshape(values.shape)


def _rhat_classic(values: np.ndarray) -> float:
    m, s = values.shape
    chain_means = values.mean(axis=1)
    w = float(np.mean(np.var(values, axis=1, ddof=1)))
    if w <= 0 or not np.isfinite(w):
        raise DegenerateTraceError("zero within-chain variance")
    b = s * float(np.var(chain_means, ddof=1))
    var_plus = (s - 1) / s * w + b / s
    return float(np.sqrt(var_plus / w))


def split_rhat(trace: ParameterTrace, *, rank_normalize: bool = True) -> float:
    """Rank-normalized split potential scale reduction factor.

    Chains are halved, pooled values rank-normalized through the inverse
    normal transform, then the classic between/within ratio is taken. Set
    ``rank_normalize=False`` for the plain split variant.
    """
    trace = center_trace(trace)
    if trace.n_chains < 2:
        raise ValueError("split R-hat needs at least 2 chains")
    halves = _split_chains(trace.values)
    if np.ptp(halves) == 0:
        raise DegenerateTraceError("constant trace")
    if rank_normalize:
        halves = _rank_normalize(halves)
    return _rhat_classic(halves)


def henze_zirkler_test(samples: np.ndarray) -> tuple[float, float]:
    """Henze-Zirkler multivariate normality statistic and p-value.

    The p-value uses the conventional log-normal approximation of the null
    distribution. Requires at least d+2 points and a nonsingular sample
    covariance.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise ValueError("samples must be a 2-D array (points, dims)")
    n, d = x.shape
    if n < d + 2:
        raise ValueError("need at least d + 2 sample points")
    cov = np.cov(x, rowvar=False, bias=True)
    cov = np.atleast_2d(cov)
    if np.linalg.matrix_rank(cov) < d:
        raise ValueError("singular sample covariance")
    cov_inv = np.linalg.inv(cov)
    centered = x - x.mean(axis=0)
    # squared Mahalanobis distances to the mean and between pairs
    ci = centered @ cov_inv
    d_i = np.einsum("ij,ij->i", ci, centered)
    cross = ci @ centered.T
    d_ij = d_i[:, None] + d_i[None, :] - 2.0 * cross

    b2 = (1.0 / 2.0) * ((2 * d + 1) / 4.0) ** (2.0 / (d + 4)) * n ** (2.0 / (d + 4))
    hz = n * (np.mean(np.exp(-b2 / 2.0 * d_ij))
              - 2.0 * (1 + b2) ** (-d / 2.0) * np.mean(np.exp(-b2 / (2 * (1 + b2)) * d_i))
              + (1 + 2 * b2) ** (-d / 2.0))

    # log-normal null approximation
    a = 1 + 2 * b2
    wb = (1 + b2) * (1 + 3 * b2)
    mu = 1 - a ** (-d / 2.0) * (1 + d * b2 / a + d * (d + 2) * b2 ** 2 / (2 * a ** 2))
    s2 = (2 * (1 + 4 * b2) ** (-d / 2.0)
          + 2 * a ** (-d) * (1 + 2 * d * b2 ** 2 / a ** 2
                             + 3 * d * (d + 2) * b2 ** 4 / (4 * a ** 4))
          - 4 * wb ** (-d / 2.0) * (1 + 3 * d * b2 ** 2 / (2 * wb)
                                    + d * (d + 2) * b2 ** 4 / (2 * wb ** 2)))
    log_mu = np.log(np.sqrt(mu ** 4 / (s2 + mu ** 2)))
    log_sigma = np.sqrt(np.log1p(s2 / mu ** 2))
    pval = float(stats.lognorm.sf(hz, log_sigma, scale=np.exp(log_mu)))
    return float(hz), pval


@dataclass
class DiagnosticsReport:
    """Per-parameter convergence diagnostics plus aggregates."""

    parameters: dict
    rhat_max: float
    ess_median: float
    max_lag: int

    @property
    def names(self):
        return list(self.parameters)


def traces_from_draws(draws: DrawSet, *, anchor_vertex: int | None = None) -> dict:
    """Per-parameter traces (theta circular, kappa/beta linear) from draws.

    Draws must contain equal-length post-warm-up segments per chain; the
    anchor's pinned angle is excluded when given (it is constant by
    construction).
    """
    sub = draws.post_warmup()
    chains = [sub.for_chain(int(c)) for c in sub.chain_ids]
    if not chains:
        raise ValueError("no post-warm-up draws")
    lengths = {len(c) for c in chains}
    if len(lengths) != 1:
        raise ValueError("chains have unequal lengths")
    n = sub.n_vertices
    traces = {}
    for v in range(n):
        if anchor_vertex is not None and v == anchor_vertex:
            continue
        traces[f"theta_{v}"] = ParameterTrace(
            np.stack([c.theta[:, v] for c in chains]), kind="circular")
    for v in range(n):
        traces[f"kappa_{v}"] = ParameterTrace(
            np.stack([c.kappa[:, v] for c in chains]), kind="linear")
    traces["beta"] = ParameterTrace(np.stack([c.beta for c in chains]), kind="linear")
    return traces


def diagnostics_report(draws: DrawSet, *, anchor_vertex: int | None = None,
                       max_lag: int | None = None) -> DiagnosticsReport:
    """R-hat, ESS, and autocovariance for every parameter in the draws."""
    traces = traces_from_draws(draws, anchor_vertex=anchor_vertex)
    n_draws = next(iter(traces.values())).n_draws
    lag = max_lag if max_lag is not None else min(100, n_draws - 1)
    per_param = {}
    for name, trace in traces.items():
        entry = {}
        try:
            entry["rhat"] = split_rhat(trace)
            entry["rhat_plain"] = split_rhat(trace, rank_normalize=False)
        except (DegenerateTraceError, ValueError):
            entry["rhat"] = np.nan
            entry["rhat_plain"] = np.nan
        try:
            entry["ess"] = effective_sample_size(trace)
        except (DegenerateTraceError, ValueError):
            entry["ess"] = np.nan
        try:
            entry["autocovariance"] = normalized_autocovariance(trace, lag)
        except (DegenerateTraceError, ValueError):
            entry["autocovariance"] = np.full(lag + 1, np.nan)
        per_param[name] = entry
    rhats = np.array([e["rhat"] for e in per_param.values()])
    esses = np.array([e["ess"] for e in per_param.values()])
    return DiagnosticsReport(
        parameters=per_param,
        rhat_max=float(np.nanmax(rhats)) if np.any(np.isfinite(rhats)) else np.nan,
        ess_median=float(np.nanmedian(esses)) if np.any(np.isfinite(esses)) else np.nan,
        max_lag=lag)
