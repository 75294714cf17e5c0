"""Select the simplex kernel backend at import time.

The compiled Cython extension is used when it was built; otherwise (or when
the environment variable ``GREENSTREAM_PURE_PYTHON`` is set to a non-empty
value other than ``0``) the numpy fallback is used. ``BACKEND`` names the
active choice and ``get_backend`` returns either module explicitly, which is
what the equivalence tests and the benchmark use.
"""
import os
from types import ModuleType

from . import _kernels_py

BASIC = _kernels_py.BASIC
AT_LOWER = _kernels_py.AT_LOWER
AT_UPPER = _kernels_py.AT_UPPER

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_force_py = os.environ.get("GREENSTREAM_PURE_PYTHON", "") not in ("", "0")

if _compiled is not None and not _force_py:
    _active = _compiled
    BACKEND = "cython"
else:
    _active = _kernels_py
    BACKEND = "python"

pivot = _active.pivot
price = _active.price
ratio_test = _active.ratio_test


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        return _active
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")
