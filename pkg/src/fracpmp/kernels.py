"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``FRACPMP_PURE_PYTHON=1``
to force the NumPy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("FRACPMP_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

lower_toeplitz_apply = _impl.lower_toeplitz_apply
march_linear = _impl.march_linear
