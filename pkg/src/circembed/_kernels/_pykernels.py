"""NumPy fallback for the pairwise log-likelihood kernels.

Same contracts as the compiled module. Angles are assumed wrapped to
[-pi, pi); the adjacency matrix is a symmetric uint8 (n, n) array with a
zero diagonal.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def log_likelihood(theta, kappa, beta, mu, radius, adj):
    """Sum of log edge/non-edge probabilities over all vertex pairs.

    Returns -inf when a disconnected pair sits at zero angular separation.
    """
    sep = np.pi - np.abs(np.pi - np.abs(theta[:, None] - theta[None, :]))
    with np.errstate(divide="ignore"):
        x = beta * np.log(radius * sep / (mu * kappa[:, None] * kappa[None, :]))
    sign = np.where(adj != 0, 1.0, -1.0)
    terms = -np.logaddexp(0.0, sign * x)
    iu, ju = np.triu_indices(len(theta), k=1)
    return float(terms[iu, ju].sum())


def delta_log_likelihood_theta(theta, kappa, beta, mu, radius, adj, w, new_theta):
    """Log-likelihood change from moving vertex ``w`` to angle ``new_theta``.

    Only valid from a state with finite log-likelihood; returns -inf when the
    move lands on a disconnected vertex.
    """
    sep_old = np.pi - np.abs(np.pi - np.abs(theta - theta[w]))
    sep_new = np.pi - np.abs(np.pi - np.abs(theta - new_theta))
    scale = radius / (mu * kappa * kappa[w])
    with np.errstate(divide="ignore"):
        x_old = beta * np.log(sep_old * scale)
        x_new = beta * np.log(sep_new * scale)
    sign = np.where(adj[w] != 0, 1.0, -1.0)
    t_old = -np.logaddexp(0.0, sign * x_old)
    t_new = -np.logaddexp(0.0, sign * x_new)
    t_old[w] = 0.0
    t_new[w] = 0.0
    return float(np.sum(t_new) - np.sum(t_old))
