"""Shared test helpers: independent oracles and random instance makers.

Oracles deliberately avoid the library's code paths (direct formula
evaluation, brute force, high-precision arithmetic) so they can certify the
implementation rather than mirror it.
"""

import math

import mpmath
import numpy as np
import pytest

from circembed import Embedding, Graph

TWO_PI = 2.0 * math.pi


def oracle_angular_separation(a: float, b: float) -> float:
    """Wrap both angles to [0, 2*pi) and take the shorter arc."""
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def oracle_mu(beta: float, kappa) -> float:
    return beta * math.sin(math.pi / beta) / (TWO_PI * float(np.mean(kappa)))


def oracle_log_likelihood(graph: Graph, emb: Embedding, mu: float | None = None,
                          dps: int = 50) -> float:
    """Pair-by-pair high-precision evaluation of the edge probabilities."""
    if mu is None:
        mu = oracle_mu(emb.beta, emb.kappa)
    with mpmath.workdps(dps):
        total = mpmath.mpf(0)
        n = graph.n_vertices
        radius = mpmath.mpf(n) / (2 * mpmath.pi)
        for u in range(n):
            for v in range(u + 1, n):
                sep = oracle_angular_separation(float(emb.theta[u]), float(emb.theta[v]))
                if sep == 0.0:
                    if graph.has_edge(u, v):
                        continue  # p = 1 contributes log 1 = 0
                    return -math.inf
                x = radius * sep / (mpmath.mpf(mu) * emb.kappa[u] * emb.kappa[v])
                p = 1 / (1 + x ** mpmath.mpf(emb.beta))
                if graph.has_edge(u, v):
                    total += mpmath.log(p)
                else:
                    total += mpmath.log(1 - p)
        return float(total)


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p
    return Graph(n, zip(iu[mask].tolist(), ju[mask].tolist()))


def random_embedding(n: int, rng: np.random.Generator, beta_range=(1.5, 6.0)) -> Embedding:
    return Embedding(rng.uniform(-np.pi, np.pi, n),
                     rng.uniform(0.5, 8.0, n),
                     rng.uniform(*beta_range))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
