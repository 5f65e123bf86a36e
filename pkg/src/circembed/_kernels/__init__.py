"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the NumPy
fallback is used. ``CIRCEMBED_BACKEND=python`` or ``=cython`` forces a
backend (the latter raises if the extension is missing).
"""

import os

_requested = os.environ.get("CIRCEMBED_BACKEND", "auto").strip().lower()

if _requested in ("auto", "", "cython"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _pykernels as _impl

        BACKEND = "python"
elif _requested == "python":
    from . import _pykernels as _impl

    BACKEND = "python"
else:
    raise ValueError(f"unknown CIRCEMBED_BACKEND value: {_requested!r}")

log_likelihood = _impl.log_likelihood
delta_log_likelihood_theta = _impl.delta_log_likelihood_theta

__all__ = ["BACKEND", "log_likelihood", "delta_log_likelihood_theta"]
