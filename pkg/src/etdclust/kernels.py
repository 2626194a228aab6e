"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy
implementation is used. Set ``ETDCLUST_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py as python_backend

compiled_backend = None
if not os.environ.get("ETDCLUST_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

etd_rows = backend.etd_rows
first_layer_groups = backend.first_layer_groups


def available_backends():
    """Mapping of backend name to module, compiled one first when present."""
    out = {}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    out["python"] = python_backend
    return out
