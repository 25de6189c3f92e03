"""Selection between the compiled sweeps and the pure-Python solver path.

The compiled extension (gmfg._kernels, Cython) implements the RK4 sweeps for
kernel-eligible models: the quadratic congestion family with a registry
population coupling. Everything else, and every run with GMFG_BACKEND=python,
goes through the generic Python path, which accepts arbitrary models. The
two paths implement identical semantics; tests pin their agreement and
benchmarks/bench_backends.py compares their speed.
"""

from __future__ import annotations

import os

from .errors import GmfgError

try:
    from . import _kernels as kernels

    HAVE_COMPILED = True
except ImportError:
    kernels = None
    HAVE_COMPILED = False


def forced_mode() -> str | None:
    """GMFG_BACKEND environment override: 'python' or 'compiled'."""
    mode = os.environ.get("GMFG_BACKEND", "").strip().lower()
    if mode in ("python", "compiled"):
        return mode
    if mode:
        raise GmfgError(f"GMFG_BACKEND must be 'python' or 'compiled', got '{mode}'")
    return None


def use_compiled(model) -> bool:
    """Whether the sweeps for this model run in the compiled extension."""
    mode = forced_mode()
    if mode == "python":
        return False
    if mode == "compiled":
        if not HAVE_COMPILED:
            raise GmfgError("GMFG_BACKEND=compiled but the extension is not importable")
        if model.kernel_params is None:
            raise GmfgError(
                "GMFG_BACKEND=compiled but the model is not kernel-eligible "
                f"(family '{model.name}', coupling '{model.f.name}')"
            )
        return True
    return HAVE_COMPILED and model.kernel_params is not None


def active_backend(model) -> str:
    return "compiled" if use_compiled(model) else "python"
