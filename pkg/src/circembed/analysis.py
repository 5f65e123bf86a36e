"""Ensemble analysis: posterior-predictive graphs, hyperbolic-plane
coordinates, greedy routing, hierarchy, and link prediction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .draws import DrawSet
from .model import (Embedding, Graph, TWO_PI, angular_separation,
                    edge_probability_matrix, mu_constant)
from .rng import DOMAIN_ANALYSIS, substream


def sample_graph(emb: Embedding, rng: np.random.Generator) -> Graph:
    """Draw one graph: each pair connected independently with its model probability."""
    p = edge_probability_matrix(emb)
    n = emb.n_vertices
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p[iu, ju]
    return Graph(n, zip(iu[mask].tolist(), ju[mask].tolist()))


def density(graph: Graph) -> float:
    """Edge count over the number of possible pairs."""
    n = graph.n_vertices
    if n < 2:
        raise ValueError("density needs at least two vertices")
    return graph.n_edges / (n * (n - 1) / 2)


def transitivity(graph: Graph) -> float:
    """3 * triangles / connected triples; 0 when there are no triples."""
    a = graph.adjacency.astype(np.int64)
    triangles = np.trace(a @ a @ a) / 6
    deg = graph.degrees
    triples = int(np.sum(deg * (deg - 1) // 2))
    if triples == 0:
        return 0.0
    return float(3.0 * triangles / triples)


def shortest_path_lengths(graph: Graph, source: int) -> np.ndarray:
    """BFS distances from ``source`` (-1 for unreachable vertices)."""
    dist = np.full(graph.n_vertices, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in graph.neighbors(u):
                if dist[v] < 0:
                    dist[v] = d
                    nxt.append(int(v))
        frontier = nxt
    return dist


def avg_shortest_path(graph: Graph) -> float:
    """Mean BFS distance over all pairs of the largest connected component."""
    component = graph.connected_components()[0]
    if len(component) < 2:
        raise ValueError("largest component has fewer than two vertices")
    sub = graph.subgraph(component)
    total = 0
    count = 0
    for s in range(sub.n_vertices):
        dist = shortest_path_lengths(sub, s)
        total += int(dist[s + 1:].sum())
        count += sub.n_vertices - s - 1
    return total / count


@dataclass(frozen=True)
class HyperbolicCoords:
    """Hyperbolic-plane coordinates derived from an embedding."""

    r: np.ndarray
    theta: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.r)


def to_hyperbolic(emb: Embedding, *, mu: float | None = None) -> HyperbolicCoords:
    """Map kappa to radial coordinates: r_w = R_hat - 2 ln(kappa_w / kappa_min).

    R_hat = 2 ln(n / (pi * mu * kappa_min^2)); the lowest-kappa vertices sit
    on the outer rim. Angles carry over unchanged.
    """
    kappa = emb.kappa
    if mu is None:
        mu = mu_constant(emb.beta, kappa)
    k_min = float(kappa.min())
    r_hat = 2.0 * np.log(emb.n_vertices / (np.pi * mu * k_min ** 2))
    r = r_hat - 2.0 * np.log(kappa / k_min)
    return HyperbolicCoords(r=r, theta=emb.theta.copy())


def hyperbolic_distance(coords: HyperbolicCoords, u: int, v: int) -> float:
    """Geodesic distance on the hyperbolic plane (clamped for rounding)."""
    if u == v:
        return 0.0
    ru, rv = coords.r[u], coords.r[v]
    dtheta = angular_separation(coords.theta[u], coords.theta[v])
    arg = np.cosh(ru) * np.cosh(rv) - np.sinh(ru) * np.sinh(rv) * np.cos(dtheta)
    return float(np.arccosh(max(arg, 1.0)))


def hyperbolic_distance_matrix(coords: HyperbolicCoords) -> np.ndarray:
    r, theta = coords.r, coords.theta
    dtheta = np.pi - np.abs(np.pi - np.abs(theta[:, None] - theta[None, :]))
    arg = (np.cosh(r)[:, None] * np.cosh(r)[None, :]
           - np.sinh(r)[:, None] * np.sinh(r)[None, :] * np.cos(dtheta))
    dist = np.arccosh(np.maximum(arg, 1.0))
    np.fill_diagonal(dist, 0.0)
    return dist


def greedy_routing_success(graph: Graph, coords: HyperbolicCoords,
                           pair_budget: int | None = None,
                           rng: np.random.Generator | None = None) -> float:
    """Fraction of greedy routes that reach their target.

    Routes hop to the neighbor hyperbolically closest to the target (ties
    broken by smaller vertex index) and fail on revisiting a vertex or after
    n hops. Ordered source-target pairs are taken from the largest connected
    component; if there are more than ``pair_budget``, a uniform sample is
    routed instead (requires ``rng``).
    """
    component = graph.connected_components()[0]
    if len(component) < 2:
        raise ValueError("largest component has fewer than two vertices")
    dist = hyperbolic_distance_matrix(coords)
    pairs = [(int(s), int(t)) for s in component for t in component if s != t]
    if pair_budget is not None and len(pairs) > pair_budget:
        if rng is None:
            raise ValueError("pair sampling needs an rng")
        idx = rng.choice(len(pairs), size=pair_budget, replace=False)
        pairs = [pairs[i] for i in idx]
    n = graph.n_vertices
    successes = 0
    for s, t in pairs:
        current = s
        visited = {s}
        for _ in range(n):
            nbrs = graph.neighbors(current)
            nxt = int(nbrs[np.argmin(dist[nbrs, t])])  # neighbors sorted: first min wins
            if nxt == t:
                successes += 1
                break
            if nxt in visited:
                break
            visited.add(nxt)
            current = nxt
    return successes / len(pairs)


def global_hierarchy_level(graph: Graph, coords: HyperbolicCoords) -> float:
    """1 - (2/pi) * mean angular separation across edges; in (-1, 1].

    Angularly aligned edges (radial links between inner and outer vertices)
    push the value toward 1. Rotation- and reflection-invariant.
    """
    if graph.n_edges == 0:
        raise ValueError("hierarchy level is undefined on an edgeless graph")
    u, v = graph.edge_array[:, 0], graph.edge_array[:, 1]
    seps = angular_separation(coords.theta[u], coords.theta[v])
    return float(1.0 - (2.0 / np.pi) * np.mean(seps))


def highest_density_interval(values: np.ndarray, prob: float = 0.5) -> tuple[float, float]:
    """Shortest interval of sorted draws containing at least ``prob`` of them."""
    x = np.sort(np.asarray(values, dtype=float))
    s = len(x)
    if s == 0:
        raise ValueError("empty sample")
    if s == 1:
        return float(x[0]), float(x[0])
    m = min(int(np.floor(prob * s)) + 1, s)
    widths = x[m - 1:] - x[: s - m + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + m - 1])


@dataclass
class PredictiveSummary:
    """Per-draw graph/coordinate properties with interval summaries."""

    per_draw: dict                 # metric -> (S,) array (NaN where skipped)
    summary: dict                  # metric -> dict of median/q25/q75/hdi bounds
    skipped: dict                  # metric -> count of draws skipped
    observed: dict = field(default_factory=dict)


PREDICTIVE_METRICS = ("density", "transitivity", "avg_shortest_path",
                      "greedy_success", "hierarchy")


def _summarize(values: np.ndarray) -> dict:
    ok = values[np.isfinite(values)]
    if len(ok) == 0:
        return {k: np.nan for k in ("median", "q25", "q75", "hdi_low", "hdi_high")}
    lo, hi = highest_density_interval(ok, 0.5)
    return {"median": float(np.median(ok)),
            "q25": float(np.percentile(ok, 25)),
            "q75": float(np.percentile(ok, 75)),
            "hdi_low": lo, "hdi_high": hi}


def posterior_predictive_summary(draws: DrawSet, graph: Graph, *, seed: int = 0,
                                 pair_budget: int | None = 2000) -> PredictiveSummary:
    """Posterior-predictive graph properties plus coordinate properties.

    One graph is generated per draw (substream-seeded, so the result does not
    depend on evaluation order); density/transitivity/mean-shortest-path come
    from the generated graphs, greedy success and hierarchy from the draw's
    coordinates applied to the observed graph.
    """
    sub = draws.post_warmup()
    if len(sub) == 0:
        raise ValueError("no post-warm-up draws to analyze")
    per_draw = {m: np.full(len(sub), np.nan) for m in PREDICTIVE_METRICS}
    for i in range(len(sub)):
        emb = sub.embedding(i)
        rng = substream(seed, DOMAIN_ANALYSIS, i)
        g = sample_graph(emb, rng)
        per_draw["density"][i] = density(g)
        per_draw["transitivity"][i] = transitivity(g)
        try:
            per_draw["avg_shortest_path"][i] = avg_shortest_path(g)
        except ValueError:
            pass  # recorded as skipped
        coords = to_hyperbolic(emb)
        per_draw["greedy_success"][i] = greedy_routing_success(
            graph, coords, pair_budget, substream(seed, DOMAIN_ANALYSIS, i, 1))
        per_draw["hierarchy"][i] = global_hierarchy_level(graph, coords)
    summary = {m: _summarize(v) for m, v in per_draw.items()}
    skipped = {m: int(np.sum(~np.isfinite(v))) for m, v in per_draw.items()}
    observed = {"density": density(graph), "transitivity": transitivity(graph)}
    try:
        observed["avg_shortest_path"] = avg_shortest_path(graph)
    except ValueError:
        pass
    return PredictiveSummary(per_draw=per_draw, summary=summary, skipped=skipped,
                             observed=observed)


# -- link prediction ---------------------------------------------------------


def remove_random_edges(graph: Graph, fraction: float, rng: np.random.Generator,
                        *, require_connected: bool = False,
                        max_tries: int = 1000) -> tuple[Graph, list[tuple[int, int]]]:
    """Remove ceil(fraction * |E|) edges uniformly at random.

    With ``require_connected``, removal sets that disconnect the graph are
    rejected and redrawn (bounded retries).
    """
    if not 0 < fraction < 1:
        raise ValueError("removal fraction must be in (0, 1)")
    m = graph.n_edges
    k = int(np.ceil(fraction * m))
    if m == 0 or k >= m:
        raise ValueError("not enough edges to remove")
    for _ in range(max_tries):
        chosen = rng.choice(m, size=k, replace=False)
        removed = [tuple(e) for e in graph.edge_array[np.sort(chosen)]]
        keep = np.setdiff1d(np.arange(m), chosen)
        damaged = Graph(graph.n_vertices, [tuple(e) for e in graph.edge_array[keep]],
                        labels=graph.labels)
        if not require_connected or damaged.is_connected():
            return damaged, removed
    raise ValueError("could not find a connectivity-preserving removal")


Estimator = Union[DrawSet, Embedding, Callable[[Graph], Union[DrawSet, Embedding]]]


def score_unconnected_pairs(damaged: Graph, ensemble: Union[DrawSet, Embedding]) -> dict:
    """Mean connection probability for every pair not in the damaged graph."""
    n = damaged.n_vertices
    iu, ju = np.triu_indices(n, k=1)
    nonedge = damaged.adjacency[iu, ju] == 0
    iu, ju = iu[nonedge], ju[nonedge]
    if isinstance(ensemble, Embedding):
        p = edge_probability_matrix(ensemble)[iu, ju]
    else:
        sub = ensemble.post_warmup()
        if len(sub) == 0:
            raise ValueError("no post-warm-up draws to score with")
        p = np.zeros(len(iu))
        for i in range(len(sub)):
            p += edge_probability_matrix(sub.embedding(i))[iu, ju]
        p /= len(sub)
    return {(int(u), int(v)): float(s) for u, v, s in zip(iu, ju, p)}


def normalized_ranks(scores: dict, removed: list[tuple[int, int]]) -> np.ndarray:
    """Rank of each removed edge's score among never-removed non-edges.

    rank = (strictly lower scores + half of ties) / (number of never-removed
    non-edges), so chance level is 0.5 and all-equal scores give exactly 0.5.
    """
    removed_set = {tuple(sorted(e)) for e in removed}
    background = np.array([s for pair, s in scores.items() if pair not in removed_set])
    if len(background) == 0:
        raise ValueError("no never-removed non-edges to rank against")
    background = np.sort(background)
    ranks = []
    for e in removed:
        s = scores[tuple(sorted(e))]
        lo = np.searchsorted(background, s, side="left")
        hi = np.searchsorted(background, s, side="right")
        ranks.append((lo + 0.5 * (hi - lo)) / len(background))
    return np.array(ranks)


@dataclass
class LinkPredictionResult:
    ranks: np.ndarray
    auc: float
    removed_edges: list
    hist_edges: np.ndarray
    hist_counts: np.ndarray


def link_prediction_experiment(graph: Graph, removal_fraction: float,
                               draws_or_estimator: Estimator,
                               rng: np.random.Generator, *,
                               require_connected: bool = False,
                               n_bins: int = 20) -> LinkPredictionResult:
    """Remove edges, score unconnected pairs, and rank the removed edges.

    ``draws_or_estimator`` may be a DrawSet or Embedding (scored as-is) or a
    callable receiving the damaged graph and returning either, which allows
    embedding the damaged graph in-line. AUC is the mean normalized rank.
    """
    damaged, removed = remove_random_edges(graph, removal_fraction, rng,
                                           require_connected=require_connected)
    ensemble = draws_or_estimator
    if callable(ensemble) and not isinstance(ensemble, (DrawSet, Embedding)):
        ensemble = ensemble(damaged)
    scores = score_unconnected_pairs(damaged, ensemble)
    ranks = normalized_ranks(scores, removed)
    counts, edges = np.histogram(ranks, bins=n_bins, range=(0.0, 1.0))
    return LinkPredictionResult(ranks=ranks, auc=float(ranks.mean()),
                                removed_edges=removed, hist_edges=edges,
                                hist_counts=counts)
