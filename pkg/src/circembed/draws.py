"""Ordered collections of posterior draws with chain/iteration metadata."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Embedding


@dataclass
class DrawSet:
    """Posterior draws, the unit of all downstream analysis.

    Row i holds chain id, iteration index, warm-up flag, the embedding
    (theta, kappa, beta), and the cached log posterior. ``move_stats`` maps
    chain id -> move name -> (proposed, accepted) counts when produced by a
    sampler run.
    """

    theta: np.ndarray          # (S, n)
    kappa: np.ndarray          # (S, n)
    beta: np.ndarray           # (S,)
    log_posterior: np.ndarray  # (S,)
    chain: np.ndarray          # (S,) int
    iteration: np.ndarray      # (S,) int
    warmup: np.ndarray         # (S,) bool
    labels: tuple[str, ...] | None = None
    move_stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=np.float64))
        self.kappa = np.atleast_2d(np.asarray(self.kappa, dtype=np.float64))
        self.beta = np.asarray(self.beta, dtype=np.float64).ravel()
        self.log_posterior = np.asarray(self.log_posterior, dtype=np.float64).ravel()
        self.chain = np.asarray(self.chain, dtype=np.int64).ravel()
        self.iteration = np.asarray(self.iteration, dtype=np.int64).ravel()
        self.warmup = np.asarray(self.warmup, dtype=bool).ravel()
        s = len(self.beta)
        if not (self.theta.shape[0] == self.kappa.shape[0] == s == len(self.log_posterior)
                == len(self.chain) == len(self.iteration) == len(self.warmup)):
            raise ValueError("inconsistent draw array lengths")

    def __len__(self) -> int:
        return len(self.beta)

    @property
    def n_vertices(self) -> int:
        return self.theta.shape[1]

    @property
    def chain_ids(self) -> np.ndarray:
        return np.unique(self.chain)

    def embedding(self, i: int) -> Embedding:
        return Embedding(self.theta[i], self.kappa[i], float(self.beta[i]))

    def select(self, mask) -> "DrawSet":
        mask = np.asarray(mask)
        return DrawSet(self.theta[mask], self.kappa[mask], self.beta[mask],
                       self.log_posterior[mask], self.chain[mask], self.iteration[mask],
                       self.warmup[mask], labels=self.labels,
                       move_stats=dict(self.move_stats))

    def post_warmup(self) -> "DrawSet":
        return self.select(~self.warmup)

    def for_chain(self, chain_id: int) -> "DrawSet":
        return self.select(self.chain == chain_id)

    @classmethod
    def empty(cls, n_vertices: int, labels=None) -> "DrawSet":
        z = np.zeros((0, n_vertices))
        return cls(z, z.copy(), np.zeros(0), np.zeros(0), np.zeros(0, dtype=np.int64),
                   np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool), labels=labels)

    @classmethod
    def concat(cls, parts: list["DrawSet"]) -> "DrawSet":
        if not parts:
            raise ValueError("nothing to concatenate")
        stats: dict = {}
        for p in parts:
            stats.update(p.move_stats)
        return cls(np.concatenate([p.theta for p in parts]),
                   np.concatenate([p.kappa for p in parts]),
                   np.concatenate([p.beta for p in parts]),
                   np.concatenate([p.log_posterior for p in parts]),
                   np.concatenate([p.chain for p in parts]),
                   np.concatenate([p.iteration for p in parts]),
                   np.concatenate([p.warmup for p in parts]),
                   labels=parts[0].labels, move_stats=stats)
