"""Kernel backend selection.

The compiled extension (``_ckernels``) is preferred when importable; the
numpy implementation (``_pykernels``) is the fallback.  Both produce
bit-identical results, so the choice only affects speed.  Selection happens
at import time and can be pinned with ``COHORTSCHED_KERNELS=c|python`` or
switched later via ``set_backend`` (used by the benchmark and the
cross-backend tests).
"""

import os

from cohortsched._kernels import _pykernels

_BACKENDS = {"python": _pykernels}
try:
    from cohortsched._kernels import _ckernels

    _BACKENDS["c"] = _ckernels
except ImportError:
    _ckernels = None

_active = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; available: {available_backends()}")
    _active = _BACKENDS[name]


def get_backend() -> str:
    return _active.BACKEND_NAME


def backend_module(name: str):
    """Direct access to a backend module (for equivalence tests)."""
    return _BACKENDS[name]


_env = os.environ.get("COHORTSCHED_KERNELS", "").strip().lower()
if _env in ("py", "python"):
    set_backend("python")
elif _env == "c":
    set_backend("c")  # raises if the extension is unavailable
else:
    set_backend("c" if "c" in _BACKENDS else "python")


def marginal_table(req_group, d, geometric):
    return _active.marginal_table(req_group, d, geometric)


def uniform_benefit_matrix(req, inv_req, centers):
    return _active.uniform_benefit_matrix(req, inv_req, centers)


def geometric_benefit_matrix(req, centers):
    return _active.geometric_benefit_matrix(req, centers)
