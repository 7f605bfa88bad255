"""Kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the
numpy implementations take over. Set ``SVCUEP_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _pykernels

python_backend = _pykernels
compiled_backend = None

if not os.environ.get("SVCUEP_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if _active is compiled_backend else "python"

philox4x32 = _active.philox4x32
uniform_grid = _active.uniform_grid
ssim_map = _active.ssim_map
conceal_sources = _active.conceal_sources

FULL = _pykernels.FULL
BASE_UPSAMPLED = _pykernels.BASE_UPSAMPLED
PREV_COPY = _pykernels.PREV_COPY
FILLER = _pykernels.FILLER


def set_backend(name):
    """Rebind the module-level kernels to ``name`` ("compiled" or "python").
    Returns the previously active backend name."""
    global _active, BACKEND, philox4x32, uniform_grid, ssim_map, conceal_sources
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(backends)}")
    previous = BACKEND
    _active = backends[name]
    BACKEND = name
    philox4x32 = _active.philox4x32
    uniform_grid = _active.uniform_grid
    ssim_map = _active.ssim_map
    conceal_sources = _active.conceal_sources
    return previous


def available_backends():
    """Name -> module for every backend importable in this process."""
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["compiled"] = compiled_backend
    return out
