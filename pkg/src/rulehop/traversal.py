"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``RULEHOP_PURE=1`` to force the fallback (used by the parity tests and
the benchmark).
"""

from __future__ import annotations

import os

from . import _traversal_py

_FORCE_PURE = os.environ.get("RULEHOP_PURE", "") not in ("", "0")

if _FORCE_PURE:
    _impl = _traversal_py
    BACKEND = "pure"
else:
    try:
        from . import _traversal as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _traversal_py
        BACKEND = "pure"

visible_out = _impl.visible_out
visible_in = _impl.visible_in
visible_degree = _impl.visible_degree
rooted_relation_sequences = _impl.rooted_relation_sequences


def backend_name() -> str:
    return BACKEND
