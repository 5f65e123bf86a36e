# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise log-likelihood kernels (hot path of the sampler)."""

from libc.math cimport fabs, log, log1p, exp, fmax, INFINITY, M_PI

import numpy as np

cimport numpy as cnp


cdef inline double _softplus(double x) noexcept nogil:
    # log(1 + exp(x)), overflow-safe
    return log1p(exp(-fabs(x))) + fmax(x, 0.0)


cdef inline double _sep(double a, double b) noexcept nogil:
    # shorter arc between wrapped angles; |a - b| < 2*pi is guaranteed
    return M_PI - fabs(M_PI - fabs(a - b))


def log_likelihood(const double[::1] theta, const double[::1] kappa, double beta,
                   double mu, double radius, const cnp.uint8_t[:, ::1] adj):
    """Sum of log edge/non-edge probabilities over all vertex pairs.

    Returns -inf when a disconnected pair sits at zero angular separation.
    """
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t u, v
    cdef double total = 0.0
    cdef double s, x
    with nogil:
        for u in range(n):
            for v in range(u + 1, n):
                s = _sep(theta[u], theta[v])
                if s == 0.0:
                    if adj[u, v]:
                        continue  # p = 1, log p = 0
                    total = -INFINITY
                    break
                x = beta * log(radius * s / (mu * kappa[u] * kappa[v]))
                if adj[u, v]:
                    total -= _softplus(x)
                else:
                    total -= _softplus(-x)
            if total == -INFINITY:
                break
    return total


def delta_log_likelihood_theta(const double[::1] theta, const double[::1] kappa, double beta,
                               double mu, double radius, const cnp.uint8_t[:, ::1] adj,
                               Py_ssize_t w, double new_theta):
    """Log-likelihood change from moving vertex ``w`` to angle ``new_theta``.

    Only valid from a state with finite log-likelihood; returns -inf when the
    move lands on a disconnected vertex.
    """
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t v
    cdef double delta = 0.0
    cdef double s_old, s_new, scale, x
    with nogil:
        for v in range(n):
            if v == w:
                continue
            scale = radius / (mu * kappa[v] * kappa[w])
            s_new = _sep(theta[v], new_theta)
            if s_new == 0.0:
                if not adj[w, v]:
                    delta = -INFINITY
                    break
            else:
                x = beta * log(s_new * scale)
                if adj[w, v]:
                    delta -= _softplus(x)
                else:
                    delta -= _softplus(-x)
            s_old = _sep(theta[v], theta[w])
            if s_old == 0.0:
                continue  # connected pair at zero distance: old term is 0
            x = beta * log(s_old * scale)
            if adj[w, v]:
                delta += _softplus(x)
            else:
                delta += _softplus(-x)
    return delta
