"""Select the compiled kernels when available, else the pure-Python ones.

``ERGOLAB_BACKEND=python`` forces the fallback (used by the benchmark and by
the cross-backend tests).
"""

import os

from ergolab import _fallback

fallback = _fallback

if os.environ.get("ERGOLAB_BACKEND", "").lower() == "python":
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from ergolab import _core as kernels
        BACKEND = "compiled"
    except ImportError:  # extension not built
        kernels = _fallback
        BACKEND = "python"

compiled = kernels if BACKEND == "compiled" else None
