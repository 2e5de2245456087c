"""Pivot-kernel selection: compiled extension if available, else pure Python.

Set ``POOLSLP_PURE=1`` in the environment to force the pure-Python kernel
(used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("POOLSLP_PURE", "") not in ("", "0"):
    from . import _core_py as core
else:
    try:
        from . import _core as core  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_py as core

IS_COMPILED: bool = core.IS_COMPILED


def get_kernel(pure: bool | None = None):
    """Return the requested kernel module (None = the import-time choice)."""
    if pure is None:
        return core
    if pure:
        from . import _core_py
        return _core_py
    from . import _core  # raises ImportError if the extension is missing
    return _core
