"""Hot Monte Carlo kernels with a selectable backend.

Two implementations share one contract: ``numba_impl`` (JIT-compiled, the
default) and ``numpy_impl`` (pure NumPy fallback).  Both consume random
draws from the supplied ``numpy.random.Generator`` in exactly the same
order, so a fixed seed yields the same trial stream on either backend.

Set the environment variable ``XCOVSEL_BACKEND=numpy`` before import to
force the fallback; it is also selected automatically when numba is not
installed.  ``BACKEND`` records which implementation is active.
"""

import os

_requested = os.environ.get("XCOVSEL_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(
        f"XCOVSEL_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numba":
    try:
        from . import numba_impl as _active
        BACKEND = "numba"
    except ImportError:
        from . import numpy_impl as _active
        BACKEND = "numpy"
else:
    from . import numpy_impl as _active
    BACKEND = "numpy"

haar_orthogonal = _active.haar_orthogonal
top_left_singular_vector = _active.top_left_singular_vector
mc_batch = _active.mc_batch
paired_batch = _active.paired_batch

SAMPLER_WISHART = 0
SAMPLER_DATA = 1
SAMPLER_ASYMPTOTIC = 2
METHOD_THRESHOLDING = 0
METHOD_SVD = 1

__all__ = [
    "BACKEND",
    "haar_orthogonal",
    "top_left_singular_vector",
    "mc_batch",
    "paired_batch",
    "SAMPLER_WISHART",
    "SAMPLER_DATA",
    "SAMPLER_ASYMPTOTIC",
    "METHOD_THRESHOLDING",
    "METHOD_SVD",
]
