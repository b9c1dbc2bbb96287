"""Kernel backend selection.

The compiled core (``momentmap._core``, Cython) is preferred when it
imported cleanly; otherwise the numpy reference kernels are used.  Both
implement the same operation-ordered arithmetic and give bit-identical
results, so the choice affects speed only.

Set ``MOMENTMAP_BACKEND=numpy`` or ``MOMENTMAP_BACKEND=compiled`` to force
one side (the latter raises at import if the extension is missing).
"""

import os

from . import _kernels as _numpy_kernels

_requested = os.environ.get("MOMENTMAP_BACKEND", "auto").strip().lower()

if _requested not in ("auto", "compiled", "numpy"):
    raise ImportError(
        f"MOMENTMAP_BACKEND={_requested!r}: expected auto, compiled, or numpy")

_compiled = None
if _requested in ("auto", "compiled"):
    try:
        from . import _core as _compiled
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "MOMENTMAP_BACKEND=compiled but the momentmap._core extension "
                "is not built")
        _compiled = None

kernels = _compiled if _compiled is not None else _numpy_kernels


def backend_name():
    """Name of the active kernel backend: 'compiled' or 'numpy'."""
    return "compiled" if kernels is not _numpy_kernels else "numpy"


def get_backend(name=None):
    """Return a kernel namespace by name (None means the active one)."""
    if name is None:
        return kernels
    if name == "numpy":
        return _numpy_kernels
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled backend not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
