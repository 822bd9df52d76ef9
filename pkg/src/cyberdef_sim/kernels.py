"""Kernel selection.

The compiled extension is used when it was built; otherwise the pure-Python
module is loaded. Set ``CYBERDEF_SIM_PURE=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("CYBERDEF_SIM_PURE") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

fnv1a64 = _impl.fnv1a64
mix64 = _impl.mix64
uniform = _impl.uniform
bernoulli_hits = _impl.bernoulli_hits
