"""Metropolis-Hastings sampler mixing random-walk and cluster moves.

Random-walk moves perturb one coordinate at a time (normal walk on a single
angle, multiplicative log-normal walk on a single kappa, normal walk on
beta). Cluster moves partition the circle into angularly contiguous groups
separated by gaps above a random threshold and apply rigid isometries to
whole groups: flip (reflect a cluster about its arc midpoint), exchange
(swap the arc positions of two clusters), and translate (move one cluster
onto another's arc start). Cluster moves jump between posterior modes that
single-coordinate walks cross only slowly.

Every accepted state satisfies the gauge constraints; proposals re-impose
the gauge, which is likelihood-neutral. Chains are deterministic given
(seed, chain_id) and the kernel backend.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import _kernels
from .draws import DrawSet
from .gauge import Gauge, canonical_gauge
from .model import (Embedding, Graph, PriorConfig, TWO_PI, in_half_plane,
                    wrap_angle)
from .rng import DOMAIN_CHAIN, substream

MOVE_KINDS = ("rw_theta", "rw_kappa", "rw_beta", "flip", "exchange", "translate")

DEFAULT_MIXTURE = {
    "rw_theta": 0.3,
    "rw_kappa": 0.2,
    "rw_beta": 0.1,
    "flip": 0.15,
    "exchange": 0.125,
    "translate": 0.125,
}


@dataclass(frozen=True)
class SamplerConfig:
    """All tunables of the MCMC kernel.

    ``record_stride`` keeps every stride-th state in memory (1 = everything);
    recorded post-warm-up states start exactly at the warm-up boundary, so
    recording at stride k is equivalent to thinning a full record by k.
    ``mu_reference`` fixes the kappa mean used in mu (None = current mean);
    ``use_likelihood=False`` samples the prior alone.
    """

    n_iterations: int
    n_chains: int = 4
    warmup_fraction: float = 0.5
    thinning_k: int = 10_000
    move_mixture: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_MIXTURE))
    rw_step_theta: float = 0.1
    rw_step_log_kappa: float = 0.1
    rw_step_beta: float = 0.1
    threshold_max_gap_multiplier: float = 2.0
    seed: int = 0
    record_stride: int = 1
    mu_reference: float | None = None
    use_likelihood: bool = True
    revalidate_every: int = 10_000

    def __post_init__(self):
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be nonnegative")
        if self.n_chains < 1:
            raise ValueError("n_chains must be at least 1")
        if not 0 <= self.warmup_fraction < 1:
            raise ValueError("warmup_fraction must be in [0, 1)")
        if self.thinning_k < 1:
            raise ValueError("thinning_k must be at least 1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be at least 1")
        unknown = set(self.move_mixture) - set(MOVE_KINDS)
        if unknown:
            raise ValueError(f"unknown move kinds: {sorted(unknown)}")
        probs = np.array([self.move_mixture.get(k, 0.0) for k in MOVE_KINDS])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("move mixture must be nonnegative and sum to 1")
        for name in ("rw_step_theta", "rw_step_log_kappa", "rw_step_beta",
                     "threshold_max_gap_multiplier"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def with_updates(self, **kwargs) -> "SamplerConfig":
        return replace(self, **kwargs)


@dataclass
class ChainState:
    """Mutable per-chain state: current embedding arrays and cached targets.

    ``kappa_mean`` and ``kappa_prior_sum`` are incremental caches reset by the
    periodic revalidation.
    """

    theta: np.ndarray
    kappa: np.ndarray
    beta: float
    log_lik: float
    log_pri: float
    rng: np.random.Generator
    iteration: int = 0
    kappa_mean: float = 0.0
    kappa_prior_sum: float = 0.0

    @property
    def log_post(self) -> float:
        return self.log_lik + self.log_pri

    @property
    def embedding(self) -> Embedding:
        return Embedding(self.theta.copy(), self.kappa.copy(), self.beta)


@dataclass(frozen=True)
class Clustering:
    """Ordered partition of vertices into contiguous angular arcs.

    Each cluster array lists vertex indices in increasing arc position from
    the cluster's start; consecutive within-cluster gaps are <= threshold and
    gaps between adjacent clusters exceed it.
    """

    clusters: tuple
    threshold: float

    def __len__(self):
        return len(self.clusters)


def sample_gap_threshold(n_vertices: int, rng: np.random.Generator,
                         multiplier: float) -> float:
    """Threshold ~ Uniform(0, multiplier * mean inter-vertex gap)."""
    return float(rng.uniform(0.0, multiplier * TWO_PI / n_vertices))


def partition_clusters(emb: Embedding, rng: np.random.Generator,
                       config: SamplerConfig) -> Clustering:
    """Cut the angle-sorted circle at every gap above a random threshold."""
    threshold = sample_gap_threshold(emb.n_vertices, rng,
                                     config.threshold_max_gap_multiplier)
    return partition_at_threshold(emb.theta, threshold)


def partition_at_threshold(theta: np.ndarray, threshold: float) -> Clustering:
    """Deterministic part of the partition for a given threshold."""
    n = len(theta)
    if n < 2:
        raise ValueError("partitioning needs at least two vertices")
    order = np.argsort(theta, kind="stable")
    sorted_theta = theta[order]
    gaps = np.empty(n)
    gaps[:-1] = np.diff(sorted_theta)
    gaps[-1] = sorted_theta[0] + TWO_PI - sorted_theta[-1]
    cuts = np.flatnonzero(gaps > threshold)
    if len(cuts) == 0:
        clusters = (order,)
    else:
        # cluster c starts just after cut c-1 (circularly)
        clusters = []
        for i, cut in enumerate(cuts):
            start = (cuts[i - 1] + 1) % n
            if start <= cut:
                members = order[start:cut + 1]
            else:
                members = np.concatenate([order[start:], order[:cut + 1]])
            clusters.append(members)
        clusters.sort(key=lambda c: theta[c[0]])
        clusters = tuple(clusters)
    return Clustering(clusters, threshold)


def _arc_start(theta: np.ndarray, cluster: np.ndarray) -> float:
    return float(theta[cluster[0]])


def flip_cluster(theta: np.ndarray, cluster: np.ndarray) -> np.ndarray:
    """Reflect one cluster about the angular midpoint of its arc.

    The cluster array must be in arc order (as produced by the partition);
    within-cluster separations are preserved exactly.
    """
    start = theta[cluster[0]]
    length = (theta[cluster[-1]] - start) % TWO_PI
    center = start + 0.5 * length
    out = theta.copy()
    out[cluster] = wrap_angle(2.0 * center - theta[cluster])
    return out


def exchange_clusters(theta: np.ndarray, clustering: Clustering, i: int, j: int) -> np.ndarray:
    """Rigidly swap the arc start positions of clusters i and j."""
    a, b = clustering.clusters[i], clustering.clusters[j]
    shift = _arc_start(theta, b) - _arc_start(theta, a)
    out = theta.copy()
    out[a] = wrap_angle(theta[a] + shift)
    out[b] = wrap_angle(theta[b] - shift)
    return out


def translate_cluster(theta: np.ndarray, clustering: Clustering, i: int, j: int) -> np.ndarray:
    """Rigidly move cluster i so its arc start coincides with cluster j's."""
    a, b = clustering.clusters[i], clustering.clusters[j]
    shift = _arc_start(theta, b) - _arc_start(theta, a)
    out = theta.copy()
    out[a] = wrap_angle(theta[a] + shift)
    return out


def _maybe_gauge(theta: np.ndarray, emb: Embedding, gauge: Gauge | None) -> Embedding:
    out = Embedding(theta, emb.kappa, emb.beta)
    return canonical_gauge(out, gauge) if gauge is not None else out


def flip_move(emb: Embedding, clustering: Clustering, rng: np.random.Generator,
              gauge: Gauge | None = None) -> Embedding:
    """Reflect one uniformly chosen cluster about its arc midpoint."""
    c = int(rng.integers(len(clustering)))
    return _maybe_gauge(flip_cluster(emb.theta, clustering.clusters[c]), emb, gauge)


def exchange_move(emb: Embedding, clustering: Clustering, rng: np.random.Generator,
                  gauge: Gauge | None = None) -> Embedding:
    """Swap the arc positions of two uniformly chosen distinct clusters."""
    if len(clustering) < 2:
        raise ValueError("exchange needs at least two clusters")
    i, j = rng.choice(len(clustering), size=2, replace=False)
    return _maybe_gauge(exchange_clusters(emb.theta, clustering, int(i), int(j)),
                        emb, gauge)


def translate_move(emb: Embedding, clustering: Clustering, rng: np.random.Generator,
                   gauge: Gauge | None = None) -> Embedding:
    """Move one uniformly chosen cluster onto another's arc start."""
    if len(clustering) < 2:
        raise ValueError("translate needs at least two clusters")
    i, j = rng.choice(len(clustering), size=2, replace=False)
    return _maybe_gauge(translate_cluster(emb.theta, clustering, int(i), int(j)),
                        emb, gauge)


def rw_proposal(state: "ChainState", which: str, config: SamplerConfig,
                gauge: Gauge | None = None) -> Embedding:
    """Single-coordinate random-walk proposal; advances ``state.rng``.

    theta: normal step on one free angle (wrapped); kappa: multiplicative
    log-normal step on one kappa (its +log(kappa'/kappa) Hastings correction
    is applied by the MH step, not here); beta: normal step. The gauge is
    re-imposed when one is supplied.
    """
    rng = state.rng
    theta, kappa, beta = state.theta.copy(), state.kappa.copy(), state.beta
    n = len(theta)
    if which == "theta":
        free = ([v for v in range(n) if v != gauge.anchor_vertex]
                if gauge is not None else list(range(n)))
        v = free[int(rng.integers(len(free)))]
        theta[v] = wrap_angle(theta[v] + rng.normal(0.0, config.rw_step_theta))
    elif which == "kappa":
        v = int(rng.integers(n))
        kappa[v] = kappa[v] * math.exp(rng.normal(0.0, config.rw_step_log_kappa))
    elif which == "beta":
        beta = beta + rng.normal(0.0, config.rw_step_beta)
    else:
        raise ValueError(f"unknown random-walk coordinate {which!r}")
    return _maybe_gauge(theta, Embedding(state.theta, kappa, beta), gauge)


class ChainSampler:
    """One-chain sampler bound to a graph, prior, and gauge."""

    def __init__(self, graph: Graph, prior: PriorConfig, config: SamplerConfig,
                 gauge: Gauge | None = None):
        if graph.n_vertices < 3:
            raise ValueError("sampling needs at least three vertices "
                             "(two gauge vertices plus one free vertex)")
        self.graph = graph
        self.prior = prior
        self.config = config
        self.gauge = gauge if gauge is not None else Gauge.from_graph(graph)
        self.radius = graph.n_vertices / TWO_PI
        self._free_theta = np.array(
            [v for v in range(graph.n_vertices) if v != self.gauge.anchor_vertex],
            dtype=np.int64)
        self._cum_mixture = np.cumsum(
            [config.move_mixture.get(k, 0.0) for k in MOVE_KINDS]).tolist()
        self.move_stats = {k: [0, 0] for k in MOVE_KINDS}

    # -- target evaluation ------------------------------------------------

    def _mu_from(self, beta: float, kappa_mean: float) -> float:
        if self.config.mu_reference is not None:
            kappa_mean = self.config.mu_reference
        return beta * math.sin(math.pi / beta) / (TWO_PI * kappa_mean)

    def _log_lik(self, theta: np.ndarray, kappa: np.ndarray, beta: float,
                 kappa_mean: float) -> float:
        if not self.config.use_likelihood:
            return 0.0
        return _kernels.log_likelihood(theta, kappa, beta,
                                       self._mu_from(beta, kappa_mean),
                                       self.radius, self.graph.adjacency)

    def _beta_term(self, beta: float) -> float:
        z = (beta - self.prior.beta0) / self.prior.sigma
        return -0.5 * z * z

    def _kappa_prior_sum(self, kappa: np.ndarray) -> float:
        return float(np.sum(np.log1p(np.square(kappa / self.prior.gamma))))

    def _log_pri(self, theta: np.ndarray, kappa: np.ndarray, beta: float) -> float:
        if not beta > 1:
            return -np.inf
        if np.any(kappa <= self.prior.epsilon):
            return -np.inf
        if theta[self.gauge.anchor_vertex] != 0.0:
            return -np.inf
        if not in_half_plane(float(theta[self.gauge.half_plane_vertex])):
            return -np.inf
        return self._beta_term(beta) - self._kappa_prior_sum(kappa)

    # -- state construction ------------------------------------------------

    def init_state(self, chain_id: int, ground_truth: Embedding | None = None) -> ChainState:
        """Start from the ground truth (gauge-normalized) or from the priors.

        Without ground truth: kappa_u = max(deg(u), 2*epsilon), theta from
        the uniform prior, beta from the truncated half-normal prior.
        """
        rng = substream(self.config.seed, DOMAIN_CHAIN, chain_id)
        if ground_truth is not None:
            if ground_truth.n_vertices != self.graph.n_vertices:
                raise ValueError("ground truth size does not match graph")
            emb = canonical_gauge(ground_truth, self.gauge)
            theta = emb.theta.copy()
            kappa = emb.kappa.copy()
            beta = emb.beta
        else:
            theta = rng.uniform(-np.pi, np.pi, self.graph.n_vertices)
            beta = self._sample_beta_prior(rng)
            kappa = np.maximum(self.graph.degrees.astype(np.float64),
                               2.0 * self.prior.epsilon)
            emb = canonical_gauge(Embedding(theta, kappa, beta), self.gauge)
            theta = emb.theta.copy()
        kappa_mean = float(kappa.mean())
        return ChainState(theta=theta, kappa=kappa, beta=beta,
                          log_lik=self._log_lik(theta, kappa, beta, kappa_mean),
                          log_pri=self._log_pri(theta, kappa, beta),
                          rng=rng, iteration=0, kappa_mean=kappa_mean,
                          kappa_prior_sum=self._kappa_prior_sum(kappa))

    def _sample_beta_prior(self, rng: np.random.Generator) -> float:
        while True:
            b = rng.normal(self.prior.beta0, self.prior.sigma)
            if b > 1.0:
                return float(b)

    # -- proposals ---------------------------------------------------------

    def _gauge_fix(self, theta: np.ndarray) -> np.ndarray:
        anchor = self.gauge.anchor_vertex
        if theta[anchor] != 0.0:
            theta = wrap_angle(theta - theta[anchor])
        if not in_half_plane(float(theta[self.gauge.half_plane_vertex])):
            theta = wrap_angle(-theta)
        return theta

    def _accept(self, state: ChainState, log_ratio: float) -> bool:
        u = state.rng.random()
        if log_ratio == -np.inf:
            return False
        return math.log(u) < log_ratio if u > 0.0 else True

    @staticmethod
    def _log_ratio(new: float, old: float, correction: float = 0.0) -> float:
        # -inf-safe: a -inf proposal always loses, a -inf current state always loses
        if new == -np.inf:
            return -np.inf
        if old == -np.inf:
            return np.inf
        return new - old + correction

    def step(self, state: ChainState) -> tuple[ChainState, bool, str]:
        """One Metropolis-Hastings iteration; mutates and returns the state."""
        cfg = self.config
        idx = bisect.bisect_right(self._cum_mixture, state.rng.random())
        move = MOVE_KINDS[min(idx, len(MOVE_KINDS) - 1)]
        self.move_stats[move][0] += 1
        accepted = False

        if move == "rw_theta":
            v = int(self._free_theta[state.rng.integers(len(self._free_theta))])
            new_t = (state.theta[v] + state.rng.normal(0.0, cfg.rw_step_theta)
                     + math.pi) % TWO_PI - math.pi
            new_lik = None
            if not cfg.use_likelihood:
                dll = 0.0
            elif math.isfinite(state.log_lik):
                dll = _kernels.delta_log_likelihood_theta(
                    state.theta, state.kappa, state.beta,
                    self._mu_from(state.beta, state.kappa_mean), self.radius,
                    self.graph.adjacency, v, new_t)
            else:
                # incremental path is undefined from a -inf state
                nt = state.theta.copy()
                nt[v] = new_t
                new_lik = self._log_lik(nt, state.kappa, state.beta, state.kappa_mean)
                dll = self._log_ratio(new_lik, state.log_lik)
            if self._accept(state, dll):
                accepted = True
                state.theta[v] = new_t
                if v == self.gauge.half_plane_vertex and not in_half_plane(new_t):
                    state.theta = wrap_angle(-state.theta)
                state.log_lik = new_lik if new_lik is not None else state.log_lik + dll
        elif move == "rw_kappa":
            v = int(state.rng.integers(self.graph.n_vertices))
            z = state.rng.normal(0.0, cfg.rw_step_log_kappa)
            old_k = state.kappa[v]
            new_k = old_k * math.exp(z)
            if new_k <= self.prior.epsilon:
                new_lik = new_pri = -np.inf
                new_kappa = new_mean = new_psum = None
            else:
                new_kappa = state.kappa.copy()
                new_kappa[v] = new_k
                new_mean = state.kappa_mean + (new_k - old_k) / self.graph.n_vertices
                new_psum = (state.kappa_prior_sum
                            - math.log1p((old_k / self.prior.gamma) ** 2)
                            + math.log1p((new_k / self.prior.gamma) ** 2))
                new_pri = self._beta_term(state.beta) - new_psum
                new_lik = self._log_lik(state.theta, new_kappa, state.beta, new_mean)
            # log-normal multiplicative walk: Hastings correction +z
            if self._accept(state, self._log_ratio(new_lik + new_pri, state.log_post, z)):
                accepted = True
                state.kappa = new_kappa
                state.kappa_mean = new_mean
                state.kappa_prior_sum = new_psum
                state.log_lik, state.log_pri = new_lik, new_pri
        elif move == "rw_beta":
            new_beta = state.beta + state.rng.normal(0.0, cfg.rw_step_beta)
            if not new_beta > 1:
                new_lik = new_pri = -np.inf
            else:
                new_pri = self._beta_term(new_beta) - state.kappa_prior_sum
                new_lik = self._log_lik(state.theta, state.kappa, new_beta,
                                        state.kappa_mean)
            if self._accept(state, self._log_ratio(new_lik + new_pri, state.log_post)):
                accepted = True
                state.beta = float(new_beta)
                state.log_lik, state.log_pri = new_lik, new_pri
        else:
            threshold = sample_gap_threshold(self.graph.n_vertices, state.rng,
                                             cfg.threshold_max_gap_multiplier)
            clustering = partition_at_threshold(state.theta, threshold)
            k = len(clustering)
            new_theta = None
            if move == "flip":
                c = int(state.rng.integers(k))
                new_theta = flip_cluster(state.theta, clustering.clusters[c])
            elif k >= 2:
                i, j = state.rng.choice(k, size=2, replace=False)
                if move == "exchange":
                    new_theta = exchange_clusters(state.theta, clustering, int(i), int(j))
                else:
                    new_theta = translate_cluster(state.theta, clustering, int(i), int(j))
            # moves needing two clusters count as automatic rejections with one
            if new_theta is not None:
                new_theta = self._gauge_fix(new_theta)
                new_lik = self._log_lik(new_theta, state.kappa, state.beta,
                                        state.kappa_mean)
                # kappa/beta unchanged and gauge re-imposed: prior is unchanged
                if self._accept(state, self._log_ratio(new_lik, state.log_lik)):
                    accepted = True
                    state.theta = new_theta
                    state.log_lik = new_lik

        if accepted:
            self.move_stats[move][1] += 1
        state.iteration += 1
        if cfg.revalidate_every and state.iteration % cfg.revalidate_every == 0:
            state.kappa_mean = float(state.kappa.mean())
            state.kappa_prior_sum = self._kappa_prior_sum(state.kappa)
            state.log_lik = self._log_lik(state.theta, state.kappa, state.beta,
                                          state.kappa_mean)
            state.log_pri = self._log_pri(state.theta, state.kappa, state.beta)
        return state, accepted, move

    # -- chain driver --------------------------------------------------------

    def run(self, chain_id: int, init: Embedding | None = None) -> DrawSet:
        """Run n_iterations steps, recording states at the configured stride."""
        cfg = self.config
        self.move_stats = {k: [0, 0] for k in MOVE_KINDS}
        state = self.init_state(chain_id, init)
        warmup_end = int(cfg.warmup_fraction * cfg.n_iterations)
        stride = cfg.record_stride

        thetas, kappas, betas, lps, its, warm = [], [], [], [], [], []

        def record(it: int):
            thetas.append(state.theta.copy())
            kappas.append(state.kappa.copy())
            betas.append(state.beta)
            lps.append(state.log_post)
            its.append(it)
            warm.append(it < warmup_end)

        def should_record(it: int) -> bool:
            if it < warmup_end:
                return it % stride == 0
            return (it - warmup_end) % stride == 0

        if should_record(0):
            record(0)
        for it in range(1, cfg.n_iterations + 1):
            self.step(state)
            if should_record(it):
                record(it)

        s = len(betas)
        return DrawSet(
            np.array(thetas).reshape(s, self.graph.n_vertices),
            np.array(kappas).reshape(s, self.graph.n_vertices),
            np.array(betas), np.array(lps),
            np.full(s, chain_id, dtype=np.int64), np.array(its, dtype=np.int64),
            np.array(warm, dtype=bool), labels=self.graph.labels,
            move_stats={int(chain_id): {k: tuple(v) for k, v in self.move_stats.items()}})


def run_chain(graph: Graph, prior: PriorConfig, config: SamplerConfig, chain_id: int,
              gauge: Gauge | None = None, init: Embedding | None = None) -> DrawSet:
    """Run a single chain; deterministic given (seed, chain_id)."""
    return ChainSampler(graph, prior, config, gauge).run(chain_id, init)


def run_chains(graph: Graph, prior: PriorConfig, config: SamplerConfig,
               gauge: Gauge | None = None, init: Embedding | None = None) -> DrawSet:
    """Run config.n_chains independent chains and concatenate their draws."""
    parts = [run_chain(graph, prior, config, c, gauge, init)
             for c in range(config.n_chains)]
    return DrawSet.concat(parts)


def thin_chain(draws: DrawSet, k: int) -> DrawSet:
    """Keep every k-th post-warm-up draw of each chain (warm-up dropped)."""
    if int(k) < 1:
        raise ValueError("thinning factor must be at least 1")
    k = int(k)
    kept = []
    for c in draws.chain_ids:
        sub = draws.for_chain(int(c)).post_warmup()
        kept.append(sub.select(np.arange(len(sub)) % k == 0))
    out = DrawSet.concat(kept)
    out.move_stats = dict(draws.move_stats)
    return out
