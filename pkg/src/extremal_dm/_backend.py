"""Pick the compiled kernels when available, the numpy twin otherwise."""
from __future__ import annotations

import os

from . import _kernels_py

python_kernels = _kernels_py

if os.environ.get("EXTREMAL_DM_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
    compiled_kernels = None
else:
    try:
        from . import _kernels as compiled_kernels
    except ImportError:
        compiled_kernels = None
        kernels = _kernels_py
    else:
        kernels = compiled_kernels

BACKEND = "compiled" if kernels is not python_kernels else "python"
