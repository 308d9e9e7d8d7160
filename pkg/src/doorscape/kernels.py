"""Backend selection for the grid kernels.

The compiled extension is used when it is importable; otherwise the numpy
fallback is used. Setting ``DOORSCAPE_PURE_PYTHON=1`` forces the fallback.
"""
import os

from doorscape import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from doorscape import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None
else:
    BACKENDS["cython"] = _kernels_c

if os.environ.get("DOORSCAPE_PURE_PYTHON") == "1" or _kernels_c is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_impl = BACKENDS[BACKEND]
edt = _impl.edt
ridge_mask = _impl.ridge_mask
thin = _impl.thin
rasterize = _impl.rasterize
INF_SQ = _kernels_py.INF_SQ


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    return BACKENDS[name or BACKEND]
