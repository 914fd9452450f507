"""Backend selection for the hot loops.

The same chunk kernels (:mod:`pskip._kernels_impl`) run either as plain
numpy or compiled with numba. ``PSKIP_BACKEND=numpy|numba`` pins the
default; unset, numba is used when importable. Both backends stay
available in-process (``get_kernels("numpy")`` / ``get_kernels("numba")``)
so they can be cross-checked and benchmarked against each other.
"""

from __future__ import annotations

import importlib.util
import os

_ENV_VAR = "PSKIP_BACKEND"

try:
    from numba import njit  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via PSKIP_BACKEND=numpy
    HAS_NUMBA = False

_COMPILE_NAMES = [
    "_row_mean",
    "_consensus_err",
    "_mean_iter_violation",
    "quad_metrics_row",
    "logit_reg_value",
    "logit_reg_grad",
    "logit_metrics_row",
    "logit_node_grads",
    "proxskip_quad_chunk",
    "proxskip_logit_chunk",
    "dsgd_quad_chunk",
    "dsgd_logit_chunk",
]

_instances: dict = {}


def _fresh_impl_module():
    spec = importlib.util.find_spec("pskip._kernels_impl")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def available_backends() -> tuple:
    return ("numpy", "numba") if HAS_NUMBA else ("numpy",)


def default_backend() -> str:
    env = os.environ.get(_ENV_VAR, "").strip().lower()
    if env:
        if env not in ("numpy", "numba"):
            raise ValueError(f"{_ENV_VAR} must be 'numpy' or 'numba', got {env!r}")
        if env == "numba" and not HAS_NUMBA:
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")
        return env
    return "numba" if HAS_NUMBA else "numpy"


def get_kernels(backend: str | None = None):
    """Namespace of chunk kernels for the requested backend."""
    name = backend or default_backend()
    if name not in ("numpy", "numba"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    if name not in _instances:
        mod = _fresh_impl_module()
        if name == "numba":
            # Rebind every function through njit; compilation is lazy, so
            # inner calls resolve to the compiled versions on first use.
            for fname in _COMPILE_NAMES:
                setattr(mod, fname, njit(cache=True)(getattr(mod, fname)))
        _instances[name] = mod
    return _instances[name]
