"""Kernel backend selection.

The compiled Cython extension is preferred; the numpy implementation is used
when it is missing or when ``W2A_KERNELS=python`` is set in the environment.
"""
import os

from . import _pykernels

_forced = os.environ.get("W2A_KERNELS", "").strip().lower()

_ckernels = None
if _forced != "python":
    try:
        from . import _ckernels
    except ImportError:
        if _forced in ("c", "cython"):
            raise

if _ckernels is not None:
    BACKEND = "cython"
    channel_batch = _ckernels.channel_batch
    betainc = _ckernels.betainc
    beta_mixture_estep = _ckernels.beta_mixture_estep
else:
    BACKEND = "python"
    channel_batch = _pykernels.channel_batch
    betainc = _pykernels.betainc
    beta_mixture_estep = _pykernels.beta_mixture_estep


def available_backends():
    """Return ``{name: module}`` for every backend importable in this environment."""
    backends = {"python": _pykernels}
    try:
        from . import _ckernels as ck
    except ImportError:
        pass
    else:
        backends["cython"] = ck
    return backends
