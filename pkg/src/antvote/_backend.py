"""Import-time selection between the compiled core and the numpy fallback."""

from __future__ import annotations

import os

_forced = os.environ.get("ANTVOTE_BACKEND", "").strip().lower()

if _forced == "python":
    from . import _kernels as kernels

    BACKEND = "python"
else:
    try:
        from . import _core as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        if _forced == "cython":
            raise
        from . import _kernels as kernels

        BACKEND = "python"

poisson_binomial_pmf = kernels.poisson_binomial_pmf
equalize_gamma = kernels.equalize_gamma

__all__ = ["BACKEND", "poisson_binomial_pmf", "equalize_gamma"]
