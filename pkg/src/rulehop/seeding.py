"""Deterministic sub-seed derivation; all module streams hang off one master seed."""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *parts: object) -> int:
    """Stable 64-bit child seed for a labeled stream."""
    digest = hashlib.sha256(":".join([str(master), *map(str, parts)]).encode()).digest()
    return int.from_bytes(digest[:8], "big")
