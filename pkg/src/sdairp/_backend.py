"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; set
``SDAIRP_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _fallback

kernels = _fallback
NAME = "python"

if os.environ.get("SDAIRP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:  # extension not built
        pass
    else:
        kernels = _core
        NAME = "cython"


def use(name):
    """Switch backend at runtime ("cython" or "python"); returns the old name."""
    global kernels, NAME
    old = NAME
    if name == "python":
        kernels, NAME = _fallback, "python"
    elif name == "cython":
        from . import _core

        kernels, NAME = _core, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return old
