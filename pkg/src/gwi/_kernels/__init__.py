"""Hot loops, compiled when available.

The compiled extension ``_core`` is preferred; the numpy implementation in
``_fallback`` is used when the extension is missing or when the environment
variable ``GWI_PURE_PYTHON`` is set to a non-empty value.
"""

import importlib
import os

_BACKENDS = {"compiled": "._core", "python": "._fallback"}


def load_backend(name: str):
    """Import a backend module by name (``"compiled"`` or ``"python"``)."""
    return importlib.import_module(_BACKENDS[name], __name__)


def _select():
    if os.environ.get("GWI_PURE_PYTHON"):
        return "python", load_backend("python")
    try:
        return "compiled", load_backend("compiled")
    except ImportError:
        return "python", load_backend("python")


BACKEND, _impl = _select()
spectral_values = _impl.spectral_values
real_log_orbit = _impl.real_log_orbit

__all__ = ["BACKEND", "load_backend", "real_log_orbit", "spectral_values"]
