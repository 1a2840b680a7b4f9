"""Integration-backend selection.

The package ships two implementations of the RK4 Lindblad kernel: a compiled
Cython extension (``tricav._kernels``) and a NumPy reference
(``tricav._kernels_py``).  The compiled one is picked when importable; the
environment variable ``TRICAV_KERNEL`` forces the choice:

* ``TRICAV_KERNEL=python`` — always use the NumPy reference;
* ``TRICAV_KERNEL=cython`` — require the extension, fail loudly if missing;
* unset/empty — prefer the extension, fall back silently.

Call sites should go through ``kernels.run_rk4`` (module attribute) so the
backend stays swappable in tests.
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("TRICAV_KERNEL", "").strip().lower()
if _requested not in ("", "python", "cython"):
    raise RuntimeError(
        f"TRICAV_KERNEL must be 'python' or 'cython', got {_requested!r}"
    )

if _requested == "python":
    _impl = _kernels_py
    _backend = "python"
else:
    try:
        from . import _kernels as _ext
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _kernels_py
        _backend = "python"
    else:
        _impl = _ext
        _backend = "cython"

run_rk4 = _impl.run_rk4


def backend() -> str:
    """Name of the active integration backend: ``'cython'`` or ``'python'``."""
    return _backend
