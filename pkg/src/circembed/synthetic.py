"""Ground-truth instance generation, including the bimodal construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import sample_graph
from .errors import GenerationError
from .model import Embedding, Graph, edge_probability_matrix, wrap_angle
from .rng import DOMAIN_GENERATE, substream


@dataclass(frozen=True)
class KappaLaw:
    """Truncated Pareto law for kappa: density proportional to kappa^-exponent
    on (low, high)."""

    exponent: float = 2.5
    low: float = 4.0
    high: float = 10.0

    def __post_init__(self):
        if self.low <= 0 or self.low >= self.high:
            raise ValueError("need 0 < low < high")
        if self.exponent <= 1:
            raise ValueError("exponent must exceed 1")

    def ppf(self, u):
        """Inverse CDF; closed form keeps draws exact and deterministic."""
        a = 1.0 - self.exponent
        return (self.low ** a - np.asarray(u) * (self.low ** a - self.high ** a)) ** (1.0 / a)

    def cdf(self, x):
        a = 1.0 - self.exponent
        x = np.clip(np.asarray(x, dtype=float), self.low, self.high)
        return (self.low ** a - x ** a) / (self.low ** a - self.high ** a)


@dataclass(frozen=True)
class GroundTruthInstance:
    """A generated graph together with the embedding that produced it.

    For bimodal instances, ``alt_embedding`` records the second ground-truth
    position of ``shifted_vertex``.
    """

    graph: Graph
    embedding: Embedding
    provenance: dict
    alt_embedding: Embedding | None = None
    shifted_vertex: int | None = None


def sample_prior_embedding(n: int, beta: float, kappa_law: KappaLaw,
                           rng: np.random.Generator) -> Embedding:
    """Angles uniform on [-pi, pi); kappa from the truncated Pareto law."""
    if n < 3:
        raise ValueError("need at least three vertices")
    theta = rng.uniform(-np.pi, np.pi, n)
    kappa = kappa_law.ppf(rng.random(n))
    return Embedding(theta, kappa, beta)


def generate_instance(n: int, beta: float, kappa_law: KappaLaw, seed: int,
                      *, require_connected: bool = False,
                      max_tries: int = 1000) -> GroundTruthInstance:
    """Draw an embedding and a graph from it; optionally redraw until connected.

    Each attempt uses its own substream, so the rejection count is part of
    the deterministic record.
    """
    for attempt in range(max_tries):
        rng = substream(seed, DOMAIN_GENERATE, attempt)
        emb = sample_prior_embedding(n, beta, kappa_law, rng)
        graph = sample_graph(emb, rng)
        if not require_connected or graph.is_connected():
            provenance = {"n": n, "beta": beta, "kappa_law": vars(kappa_law),
                          "seed": seed, "rejections": attempt,
                          "require_connected": require_connected}
            return GroundTruthInstance(graph=graph, embedding=emb, provenance=provenance)
    raise GenerationError(
        f"no connected graph in {max_tries} attempts; parameters appear too sparse")


def make_bimodal_instance(n: int, beta: float, kappa_law: KappaLaw, shift: float,
                          seed: int) -> GroundTruthInstance:
    """Generate a graph whose posterior has two incompatible embeddings.

    One uniformly chosen vertex u connects to each other vertex using either
    its original angle or the angle shifted by ``shift``, with probability
    0.5 per pair, so u is tied to two incompatible neighborhoods. Both
    candidate positions are recorded.
    """
    if shift == 0:
        raise ValueError("shift must be nonzero")
    rng = substream(seed, DOMAIN_GENERATE, 0)
    emb = sample_prior_embedding(n, beta, kappa_law, rng)
    u = int(rng.integers(n))
    alt = emb.with_theta(_shifted(emb.theta, u, shift))

    p_base = edge_probability_matrix(emb)
    p_alt = edge_probability_matrix(alt)
    use_alt = rng.random(n) < 0.5  # one coin per pair involving u
    p = p_base.copy()
    p[u, :] = np.where(use_alt, p_alt[u, :], p_base[u, :])
    p[:, u] = p[u, :]

    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p[iu, ju]
    graph = Graph(n, zip(iu[mask].tolist(), ju[mask].tolist()))
    provenance = {"n": n, "beta": beta, "kappa_law": vars(kappa_law), "seed": seed,
                  "shift": shift, "shifted_vertex": u, "bimodal": True}
    return GroundTruthInstance(graph=graph, embedding=emb, provenance=provenance,
                               alt_embedding=alt, shifted_vertex=u)


def _shifted(theta: np.ndarray, u: int, shift: float) -> np.ndarray:
    out = theta.copy()
    out[u] = wrap_angle(theta[u] + shift)
    return out
