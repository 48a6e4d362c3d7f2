"""Select the per-round kernel backend at import time.

The compiled extension is preferred; set ``OKREG_PURE_PYTHON=1`` to force
the numpy fallback.
"""

import os

if os.environ.get("OKREG_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _core_py as core
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        from . import _core_py as core

BACKEND = core.NAME


def available_backends():
    """Map of backend name to module for every backend importable here."""
    from . import _core_py

    found = {"python": _core_py}
    try:
        from . import _core

        found["cython"] = _core
    except ImportError:
        pass
    return found
