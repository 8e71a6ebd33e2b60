"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``HORIZONLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py
from ._kernels_py import (  # noqa: F401
    ESCAPED,
    HIT_ORIGIN,
    MAX_STEPS,
    PROFILE_CONSTANT,
    PROFILE_RATIONAL,
    PROFILE_TANH,
    STEP_COLLAPSE,
    WINDOW_END,
    integrate_speed,
)

_compiled = None
if not os.environ.get("HORIZONLAB_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    BACKEND = "compiled"
    integrate_acoustic = _compiled.integrate_acoustic
else:
    BACKEND = "python"
    integrate_acoustic = _kernels_py.integrate_acoustic

python_integrate_acoustic = _kernels_py.integrate_acoustic
compiled_integrate_acoustic = None if _compiled is None else _compiled.integrate_acoustic
