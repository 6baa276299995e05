"""Backend selection for the evaluation kernels.

The compiled extension is preferred when importable; the NumPy fallback is
always available.  FRDECOMP_BACKEND=numpy|compiled forces a choice (forcing
"compiled" raises if the extension is missing).
"""

import os

from . import _core_np

_FORCED = os.environ.get("FRDECOMP_BACKEND")

if _FORCED == "numpy":
    _impl = _core_np
elif _FORCED == "compiled":
    from . import _corex as _impl
else:
    try:
        from . import _corex as _impl
    except ImportError:
        _impl = _core_np

BACKEND_NAME = _impl.BACKEND_NAME
clenshaw_folded = _impl.clenshaw_folded
weighted_clenshaw_sum = _impl.weighted_clenshaw_sum


def available_backends():
    """Names of importable backends (the active one listed first)."""
    names = [BACKEND_NAME]
    if BACKEND_NAME != "numpy":
        names.append("numpy")
    else:
        try:
            from . import _corex  # noqa: F401
            names.append("compiled")
        except ImportError:
            pass
    return names
