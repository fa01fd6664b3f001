"""Pick the episode kernels at import time.

The compiled ``_kernels`` module is used when it imports; set
``AUXBANDIT_BACKEND=python`` to force the pure-Python fallback.
"""
from __future__ import annotations

import logging
import os

log = logging.getLogger(__name__)


def _load(name: str):
    if name == "python":
        from . import _pykernels as mod
        return mod
    from . import _kernels as mod
    return mod


def select(preferred: str | None = None):
    """Return ``(name, module)`` for the requested or best available backend."""
    want = (preferred or os.environ.get("AUXBANDIT_BACKEND", "auto")).lower()
    if want not in ("auto", "compiled", "python"):
        raise ValueError(f"unknown backend {want!r}")
    if want in ("auto", "compiled"):
        try:
            return "compiled", _load("compiled")
        except ImportError:
            if want == "compiled":
                raise
            log.info("compiled kernels unavailable, using the pure-Python fallback")
    return "python", _load("python")


BACKEND, kernels = select()
