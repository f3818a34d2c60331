"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``HBSPECTRA_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("HBSPECTRA_PURE_PYTHON", "").strip() not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

kernels = _compiled if _compiled is not None else _kernels_py
BACKEND = "cython" if _compiled is not None else "python"


def get(name: str):
    """Return a kernel module by backend name ('cython' or 'python')."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])
