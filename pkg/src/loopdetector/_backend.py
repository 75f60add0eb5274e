"""Kernel backend selection.

The compiled extension is preferred when built; otherwise the NumPy fallback
is used.  Set ``LOOPDETECTOR_BACKEND=python`` or ``=cython`` to force a
choice (forcing ``cython`` raises if the extension is missing).  Modules
access kernels through this module's ``kernels`` attribute so the selection
can also be overridden programmatically, e.g. in tests.
"""

import os

from . import _kernels_py

_forced = os.environ.get("LOOPDETECTOR_BACKEND", "").strip().lower()

if _forced == "python":
    kernels = _kernels_py
    BACKEND = "python"
elif _forced == "cython":
    from . import _kernels as kernels  # noqa: F401  (raises if not built)

    BACKEND = "cython"
elif _forced:
    raise ValueError(f"unknown LOOPDETECTOR_BACKEND value: {_forced!r}")
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"
