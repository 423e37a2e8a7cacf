"""Select the compiled kernels when built, else the pure-Python fallback.

Set ``DCMWALK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from dcmwalk import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("DCMWALK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from dcmwalk import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

AxisController = _impl.AxisController
lipm_axis_step = _impl.lipm_axis_step
simulate_regulation = _impl.simulate_regulation
