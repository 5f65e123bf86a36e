"""Gauge fixing and symmetry handling.

The model is invariant under rotations, reflections, and graph
automorphisms. Sampling breaks the continuous symmetries by pinning the
highest-degree vertex at angle 0 and keeping the second-highest on the
upper half-circle; ensemble post-processing aligns draws to a reference by
searching over automorphisms, the two reflections, and all rotations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Embedding, Graph, in_half_plane, wrap_angle

DEFAULT_GROUP_LIMIT = 10_000


@dataclass(frozen=True)
class Gauge:
    """Vertices used to pin rotation and reflection freedom."""

    anchor_vertex: int
    half_plane_vertex: int

    def __post_init__(self):
        if self.anchor_vertex == self.half_plane_vertex:
            raise ValueError("anchor and half-plane vertices must differ")

    @classmethod
    def from_graph(cls, graph: Graph) -> "Gauge":
        """Top-two degree vertices; ties broken by smallest index."""
        if graph.n_vertices < 2:
            raise ValueError("gauge needs at least two vertices")
        order = np.lexsort((np.arange(graph.n_vertices), -graph.degrees))
        return cls(int(order[0]), int(order[1]))


def satisfies_gauge(emb: Embedding, gauge: Gauge) -> bool:
    return emb.theta[gauge.anchor_vertex] == 0.0 and in_half_plane(
        float(emb.theta[gauge.half_plane_vertex]))


def canonical_gauge(emb: Embedding, gauge: Gauge) -> Embedding:
    """Rotate so theta[anchor] = 0, reflect if the half-plane vertex is below.

    Exact likelihood invariant and idempotent.
    """
    theta = emb.theta
    if theta[gauge.anchor_vertex] != 0.0:
        theta = wrap_angle(theta - theta[gauge.anchor_vertex])
    if not in_half_plane(float(theta[gauge.half_plane_vertex])):
        theta = wrap_angle(-theta)
    if theta is emb.theta:
        return emb
    return Embedding(theta, emb.kappa, emb.beta)


@dataclass(frozen=True)
class AutomorphismSet:
    """Edge-preserving vertex permutations found by the search.

    ``truncated`` marks that the group exceeded the size limit and only the
    permutations discovered so far are included.
    """

    permutations: tuple
    truncated: bool = False

    def __iter__(self):
        return iter(self.permutations)

    def __len__(self):
        return len(self.permutations)


def is_automorphism(graph: Graph, perm: np.ndarray) -> bool:
    """Check that the permutation maps the edge set onto itself exactly."""
    perm = np.asarray(perm, dtype=np.int64)
    a = graph.adjacency
    return bool(np.array_equal(a, a[np.ix_(perm, perm)]))


def _equitable_colors(graph: Graph) -> np.ndarray:
    """Refine the degree partition until neighbor color counts are stable."""
    n = graph.n_vertices
    colors = np.unique(graph.degrees, return_inverse=True)[1]
    while True:
        signatures = []
        for v in range(n):
            nbr_colors = tuple(sorted(colors[graph.neighbors(v)].tolist()))
            signatures.append((int(colors[v]), nbr_colors))
        mapping = {sig: i for i, sig in enumerate(sorted(set(signatures)))}
        new_colors = np.array([mapping[sig] for sig in signatures], dtype=np.int64)
        if np.array_equal(new_colors, colors):
            return colors
        colors = new_colors


def enumerate_automorphisms(graph: Graph, limit: int = DEFAULT_GROUP_LIMIT) -> AutomorphismSet:
    """Backtracking enumeration of the automorphism group.

    Candidates are restricted to the equitable refinement of the degree
    partition and pruned by adjacency consistency with already-mapped
    vertices. Stops after ``limit`` permutations and flags truncation.
    """
    if limit < 1:
        raise ValueError("limit must be at least 1")
    n = graph.n_vertices
    colors = _equitable_colors(graph)
    adjacency = graph.adjacency
    # process rarest color classes first for better pruning
    class_size = np.bincount(colors)
    order = sorted(range(n), key=lambda v: (class_size[colors[v]], v))
    same_color = [np.flatnonzero(colors == colors[v]) for v in range(n)]

    found: list[np.ndarray] = []
    image = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n, dtype=bool)
    mapped: list[int] = []
    truncated = False

    def backtrack(depth: int) -> bool:
        nonlocal truncated
        if depth == n:
            found.append(image.copy())
            if len(found) >= limit:
                truncated = True
                return False
            return True
        v = order[depth]
        row = adjacency[v, mapped]
        for w in same_color[v]:
            if used[w]:
                continue
            if not np.array_equal(adjacency[w, image[mapped]], row):
                continue
            image[v] = w
            used[w] = True
            mapped.append(v)
            keep_going = backtrack(depth + 1)
            mapped.pop()
            used[w] = False
            image[v] = -1
            if not keep_going:
                return False
        return True

    complete = backtrack(0)
    if complete:
        truncated = False
    perms = tuple(p for p in found)
    for p in perms:
        p.setflags(write=False)
    return AutomorphismSet(perms, truncated)


def alignment_objective(theta: np.ndarray, reference_theta: np.ndarray) -> float:
    """Sum of squared angular separations between two angle vectors."""
    sep = np.pi - np.abs(np.pi - np.abs(theta - reference_theta) % (2 * np.pi))
    return float(np.dot(sep, sep))


def _best_rotation(delta: np.ndarray, grid_points: int, tol: float) -> tuple[float, float]:
    """Minimize f(phi) = sum sep(delta + phi)^2 over rotations.

    Dense grid scan followed by golden-section refinement on the winning
    bracket. Returns (phi, objective).
    """
    grid = np.linspace(0.0, 2 * np.pi, grid_points, endpoint=False)
    sep = np.pi - np.abs(np.pi - np.abs(delta[None, :] + grid[:, None]) % (2 * np.pi))
    objectives = np.einsum("ij,ij->i", sep, sep)
    best = int(np.argmin(objectives))
    step = 2 * np.pi / grid_points

    def f(phi: float) -> float:
        s = np.pi - np.abs(np.pi - np.abs(delta + phi) % (2 * np.pi))
        return float(np.dot(s, s))

    lo, hi = grid[best] - step, grid[best] + step
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    phi = (a + b) / 2.0
    f_phi = f(phi)
    if objectives[best] < f_phi:  # guard against refinement leaving the basin
        return float(grid[best]), float(objectives[best])
    return float(phi), f_phi


def align_embedding(emb: Embedding, reference: Embedding, autos: AutomorphismSet | None = None,
                    *, grid_points: int = 360, tol: float = 1e-9) -> Embedding:
    """Transform ``emb`` to best match ``reference``.

    Searches all supplied automorphisms, both reflections, and all rotations
    for the combination minimizing the sum of squared angular separations;
    the permutation is applied to theta and kappa together, so the
    log-likelihood is preserved. Never returns a worse objective than the
    untransformed embedding.
    """
    if emb.n_vertices != reference.n_vertices:
        raise ValueError("embedding and reference must have the same size")
    perms = list(autos) if autos is not None else []
    identity = np.arange(emb.n_vertices)
    if not any(np.array_equal(p, identity) for p in perms):
        perms.append(identity)

    best_obj = alignment_objective(emb.theta, reference.theta)
    best_theta, best_kappa = emb.theta, emb.kappa
    for perm in perms:
        for reflect in (False, True):
            t = emb.theta[perm]
            if reflect:
                t = -t
            phi, obj = _best_rotation(wrap_angle(t - reference.theta), grid_points, tol)
            if obj < best_obj:
                best_obj = obj
                best_theta = wrap_angle(t + phi)
                best_kappa = emb.kappa[perm]
    if best_theta is emb.theta:
        return emb
    return Embedding(best_theta, best_kappa, emb.beta)
