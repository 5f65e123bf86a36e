"""The S1 latent-space model: geometry, likelihood, priors, posterior.

Vertices live on a circle of radius R = n/(2*pi). An edge between u and v
exists with probability 1 / (1 + (d_uv / (mu * kappa_u * kappa_v))^beta),
where d_uv is the arc length between the vertices, kappa controls expected
degrees, and beta > 1 controls clustering. The posterior combines this
likelihood with a truncated half-normal prior on beta, half-Cauchy priors
on kappa, and uniform priors on the angles (subject to gauge constraints,
see :mod:`circembed.gauge`).

All functions here are pure; everything is evaluated in log space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from . import _kernels

if TYPE_CHECKING:
    from .gauge import Gauge

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Wrap angles to [-pi, pi). Works on scalars and arrays."""
    wrapped = (np.asarray(x) + np.pi) % TWO_PI - np.pi
    if np.ndim(x) == 0:
        return float(wrapped)
    return wrapped


def in_half_plane(t: float) -> bool:
    """Whether a wrapped angle lies on the upper half-circle [0, pi].

    pi itself is stored as -pi under the [-pi, pi) convention, so -pi counts
    as inside.
    """
    return 0.0 <= t < np.pi or t == -np.pi


class Graph:
    """Immutable simple undirected graph with labels and cached adjacency.

    Vertices are integer indices 0..n-1; ``labels`` keeps the original
    vertex names.
    """

    __slots__ = ("n_vertices", "labels", "edge_array", "adjacency", "degrees", "_neighbors")

    def __init__(self, n_vertices: int, edges: Iterable[tuple[int, int]],
                 labels: Sequence[str] | None = None):
        n = int(n_vertices)
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for {n} vertices")
            pairs.add((min(u, v), max(u, v)))
        edge_array = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
        adjacency = np.zeros((n, n), dtype=np.uint8)
        if len(edge_array):
            adjacency[edge_array[:, 0], edge_array[:, 1]] = 1
            adjacency[edge_array[:, 1], edge_array[:, 0]] = 1
        if labels is None:
            labels = tuple(str(i) for i in range(n))
        else:
            labels = tuple(str(s) for s in labels)
            if len(labels) != n:
                raise ValueError("labels length must equal n_vertices")
        object.__setattr__(self, "n_vertices", n)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "edge_array", edge_array)
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "degrees", adjacency.sum(axis=1).astype(np.int64))
        object.__setattr__(self, "_neighbors", None)
        edge_array.setflags(write=False)
        adjacency.setflags(write=False)
        self.degrees.setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    @property
    def n_edges(self) -> int:
        return len(self.edge_array)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(map(tuple, self.edge_array))

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u, v])

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbor indices of ``v`` (cached)."""
        if self._neighbors is None:
            nbrs = [np.flatnonzero(self.adjacency[i]) for i in range(self.n_vertices)]
            object.__setattr__(self, "_neighbors", nbrs)
        return self._neighbors[v]

    def connected_components(self) -> list[np.ndarray]:
        """Connected components as sorted index arrays, largest first."""
        seen = np.zeros(self.n_vertices, dtype=bool)
        components = []
        for start in range(self.n_vertices):
            if seen[start]:
                continue
            frontier = [start]
            seen[start] = True
            members = [start]
            while frontier:
                nxt = []
                for u in frontier:
                    for v in self.neighbors(u):
                        if not seen[v]:
                            seen[v] = True
                            members.append(int(v))
                            nxt.append(int(v))
                frontier = nxt
            components.append(np.array(sorted(members), dtype=np.int64))
        components.sort(key=len, reverse=True)
        return components

    def is_connected(self) -> bool:
        return len(self.connected_components()) == 1

    def subgraph(self, vertices: Sequence[int]) -> "Graph":
        """Induced subgraph on ``vertices`` (reindexed, labels preserved)."""
        keep = np.asarray(sorted(set(int(v) for v in vertices)), dtype=np.int64)
        index = {int(v): i for i, v in enumerate(keep)}
        edges = [(index[u], index[v]) for u, v in self.edge_array
                 if int(u) in index and int(v) in index]
        return Graph(len(keep), edges, labels=[self.labels[v] for v in keep])

    def __repr__(self):
        return f"Graph(n_vertices={self.n_vertices}, n_edges={self.n_edges})"


@dataclass(frozen=True)
class Embedding:
    """Per-vertex angles and degree parameters plus the inverse temperature.

    Angles are wrapped to [-pi, pi) on construction. Instances are
    value-like: mutation happens by building new instances.
    """

    theta: np.ndarray
    kappa: np.ndarray
    beta: float

    def __post_init__(self):
        theta = wrap_angle(np.asarray(self.theta, dtype=np.float64))
        kappa = np.ascontiguousarray(self.kappa, dtype=np.float64)
        if theta.ndim != 1 or kappa.ndim != 1 or len(theta) != len(kappa):
            raise ValueError("theta and kappa must be 1-D sequences of equal length")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if not np.all(np.isfinite(kappa)) or np.any(kappa <= 0):
            raise ValueError("kappa must be positive and finite")
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")
        theta = np.ascontiguousarray(theta)
        theta.setflags(write=False)
        kappa.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def n_vertices(self) -> int:
        return len(self.theta)

    def with_theta(self, theta) -> "Embedding":
        return Embedding(theta, self.kappa, self.beta)

    def with_kappa(self, kappa) -> "Embedding":
        return Embedding(self.theta, kappa, self.beta)

    def with_beta(self, beta: float) -> "Embedding":
        return Embedding(self.theta, self.kappa, beta)


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the prior densities.

    beta ~ Normal(beta0, sigma) truncated to beta > 1; kappa_w ~ half-Cauchy
    with scale gamma, truncated to kappa_w > epsilon; theta_w uniform.
    """

    beta0: float = 3.0
    sigma: float = 2.0
    gamma: float = 4.0
    epsilon: float = 1e-10

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def angular_separation(theta_u, theta_v):
    """Shorter arc angle between two directions, in [0, pi].

    Accepts unwrapped inputs; scalar or array.
    """
    delta = np.abs(np.asarray(theta_u, dtype=float) - np.asarray(theta_v, dtype=float))
    delta = delta % TWO_PI
    sep = np.pi - np.abs(np.pi - delta)
    if np.ndim(sep) == 0:
        return float(sep)
    return sep


def arc_distance(theta_u, theta_v, n_vertices: int):
    """Arc length between two vertices on the circle of radius n/(2*pi)."""
    if n_vertices < 1:
        raise ValueError("n_vertices must be at least 1")
    return (n_vertices / TWO_PI) * angular_separation(theta_u, theta_v)


def mu_constant(beta: float, kappa, *, mean_kappa: float | None = None) -> float:
    """Constant tying kappa to expected degrees.

    mu = beta * sin(pi/beta) / (2*pi * mean(kappa)). The mean defaults to the
    arithmetic mean of the supplied kappa vector; ``mean_kappa`` substitutes a
    fixed reference (e.g. the observed mean degree).
    """
    if not beta > 1:
        raise ValueError("beta must exceed 1")
    if mean_kappa is None:
        kappa = np.asarray(kappa, dtype=float)
        if kappa.size == 0 or np.any(kappa <= 0):
            raise ValueError("kappa must be non-empty and positive")
        mean_kappa = float(kappa.mean())
    if mean_kappa <= 0:
        raise ValueError("mean kappa must be positive")
    return beta * np.sin(np.pi / beta) / (TWO_PI * mean_kappa)


def edge_probability(theta_u, theta_v, kappa_u, kappa_v, beta, mu, n_vertices):
    """Connection probability of a single pair under the S1 model."""
    d = arc_distance(theta_u, theta_v, n_vertices)
    with np.errstate(divide="ignore", over="ignore"):
        ratio = d / (mu * np.asarray(kappa_u, dtype=float) * np.asarray(kappa_v, dtype=float))
        p = 1.0 / (1.0 + ratio ** beta)
    if np.ndim(p) == 0:
        return float(p)
    return p


def edge_probability_matrix(emb: Embedding, *, mu: float | None = None) -> np.ndarray:
    """Full (n, n) matrix of pairwise connection probabilities (diagonal 0)."""
    theta, kappa = emb.theta, emb.kappa
    n = emb.n_vertices
    if mu is None:
        mu = mu_constant(emb.beta, kappa)
    sep = np.pi - np.abs(np.pi - np.abs(theta[:, None] - theta[None, :]))
    d = (n / TWO_PI) * sep
    with np.errstate(divide="ignore", over="ignore"):
        ratio = d / (mu * kappa[:, None] * kappa[None, :])
        p = 1.0 / (1.0 + ratio ** emb.beta)
    np.fill_diagonal(p, 0.0)
    return p


def _resolve_mu(emb: Embedding, mu_reference: float | None) -> float:
    if mu_reference is None:
        return mu_constant(emb.beta, emb.kappa)
    return mu_constant(emb.beta, None, mean_kappa=mu_reference)


def log_likelihood(graph: Graph, emb: Embedding, *, mu_reference: float | None = None) -> float:
    """Log-probability of the observed graph under the embedding.

    -inf exactly when a disconnected pair has zero angular separation.
    ``mu_reference`` fixes the kappa mean used in mu (default: current mean).
    """
    if emb.n_vertices != graph.n_vertices:
        raise ValueError("embedding size does not match graph")
    if not emb.beta > 1:
        raise ValueError("beta must exceed 1")
    mu = _resolve_mu(emb, mu_reference)
    radius = graph.n_vertices / TWO_PI
    return _kernels.log_likelihood(emb.theta, emb.kappa, emb.beta, mu, radius,
                                   graph.adjacency)


def log_likelihood_delta_theta(graph: Graph, emb: Embedding, vertex: int, new_theta: float,
                               *, mu_reference: float | None = None) -> float:
    """Incremental log-likelihood change from moving one vertex's angle.

    O(n): only the n-1 pair terms involving ``vertex`` are recomputed. Valid
    only from a state with finite log-likelihood; mu does not depend on theta
    so the value matches a full recomputation.
    """
    if emb.n_vertices != graph.n_vertices:
        raise ValueError("embedding size does not match graph")
    mu = _resolve_mu(emb, mu_reference)
    radius = graph.n_vertices / TWO_PI
    return _kernels.delta_log_likelihood_theta(emb.theta, emb.kappa, emb.beta, mu,
                                               radius, graph.adjacency, int(vertex),
                                               wrap_angle(float(new_theta)))


def log_prior(emb: Embedding, prior: PriorConfig, gauge: "Gauge | None" = None) -> float:
    """Unnormalized log prior density; -inf outside the support.

    Support: beta > 1, every kappa_w > epsilon, and (when a gauge is given)
    theta[anchor] = 0 with theta[half_plane] in [0, pi]. Normalization
    constants are omitted throughout; only differences are meaningful.
    """
    if not emb.beta > 1:
        return -np.inf
    if np.any(emb.kappa <= prior.epsilon):
        return -np.inf
    if gauge is not None:
        if emb.theta[gauge.anchor_vertex] != 0.0:
            return -np.inf
        if not in_half_plane(emb.theta[gauge.half_plane_vertex]):
            return -np.inf
    z = (emb.beta - prior.beta0) / prior.sigma
    lp = -0.5 * z * z
    lp -= float(np.sum(np.log1p(np.square(emb.kappa / prior.gamma))))
    return lp


def log_posterior(graph: Graph, emb: Embedding, prior: PriorConfig,
                  gauge: "Gauge | None" = None, *,
                  mu_reference: float | None = None) -> float:
    """Unnormalized log posterior: log_likelihood + log_prior (evidence omitted)."""
    lp = log_prior(emb, prior, gauge)
    if lp == -np.inf:
        return -np.inf
    return log_likelihood(graph, emb, mu_reference=mu_reference) + lp
