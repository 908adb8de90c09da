"""Selects the compiled kernels when available.

Set ``VSGSS_PURE_PYTHON=1`` to force the Python fallback. ``python`` always
names the fallback module and ``compiled`` the extension (or ``None``), so
both can be exercised side by side.
"""
import os

from . import _kernels_py

python = _kernels_py
compiled = None
try:
    from . import _kernels as compiled  # type: ignore[no-redef]
except ImportError:
    pass

BACKEND = "python"
_impl = _kernels_py
if compiled is not None and os.environ.get("VSGSS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    _impl = compiled
    BACKEND = "cython"

N_STATES = _kernels_py.N_STATES
N_ALG = _kernels_py.N_ALG

zoh_step_series = _impl.zoh_step_series
rk4_simulate = _impl.rk4_simulate
