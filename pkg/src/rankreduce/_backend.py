"""Import-time selection of the per-sample kernel backend.

The compiled extension is used when it imported cleanly; otherwise the pure
NumPy kernels take over with identical semantics. Setting the environment
variable RANKREDUCE_FORCE_PYTHON to a non-empty value other than "0" before
import skips the extension, which is how the benchmark compares the two.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("RANKREDUCE_FORCE_PYTHON", "") not in ("", "0"):
    impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        impl = _kernels_py
        BACKEND = "python"


def backend_name() -> str:
    """Which kernel backend this process is running on: 'cython' or 'python'."""
    return BACKEND
