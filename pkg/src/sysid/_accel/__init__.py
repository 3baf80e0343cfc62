"""Backend selection for the hot trial-loop kernels.

The compiled extension is optional: if it was not built (or the
SYSID_PURE_PYTHON environment variable is set) the callers fall back to the
pure-numpy loops, which compute the same thing more slowly.
"""

import os

_kernel = None
_resolved = False


def kernel():
    """The compiled kernel wrapper module, or None when unavailable."""
    global _kernel, _resolved
    if not _resolved:
        _resolved = True
        if os.environ.get("SYSID_PURE_PYTHON"):
            _kernel = None
        else:
            try:
                from . import _wrap

                _kernel = _wrap
            except ImportError:
                _kernel = None
    return _kernel


def backend_name() -> str:
    return "compiled" if kernel() is not None else "python"
