"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set THERMOFLAT_FORCE_PY=1 to force the pure-python backend (used by the
benchmark and the backend-equivalence tests).
"""

import os

from . import _pykernels

if os.environ.get("THERMOFLAT_FORCE_PY"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
sample_state_paths = _impl.sample_state_paths
birkhoff_averages = _impl.birkhoff_averages
power_iteration_log = _impl.power_iteration_log


def get_backend(name=None):
    """Return a kernel module by name ('cython' or 'python'); default active."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels  # raises ImportError if not built

        return _ckernels
    raise ValueError(f"unknown kernel backend: {name!r}")
