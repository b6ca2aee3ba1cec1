"""Selects the compiled kernel when available, else the NumPy fallback.

Set ``TENSORLDA_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
masked_gram_ratio = _kernels_py.masked_gram_ratio

if os.environ.get("TENSORLDA_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        masked_gram_ratio = _compiled.masked_gram_ratio


def backends() -> dict:
    """All importable implementations keyed by name."""
    out = {"python": _kernels_py.masked_gram_ratio}
    try:
        from . import _kernels as _compiled
    except ImportError:
        return out
    out["cython"] = _compiled.masked_gram_ratio
    return out
