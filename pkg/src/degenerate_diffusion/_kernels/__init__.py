"""Hot loops: tridiagonal SDIRK march, leapfrog march, Thomas solve.

The Cython extension ``_core`` is used when it was built; otherwise (or
when ``DEGDIFF_PURE_PYTHON=1``) the numpy/LAPACK twins in ``_fallback``
are used.  ``BACKEND`` names the active one.
"""
import os

from . import _fallback

if os.environ.get("DEGDIFF_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

march = _impl.march
leapfrog_march = _impl.leapfrog_march
solve_tridiagonal = _impl.solve_tridiagonal

__all__ = ["BACKEND", "march", "leapfrog_march", "solve_tridiagonal", "_fallback"]
