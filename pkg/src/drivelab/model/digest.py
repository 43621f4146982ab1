"""Content digests for chunks and journal records."""

from __future__ import annotations

import hashlib
import zlib


def checksum(data: bytes) -> str:
    """256-bit content digest as lowercase hex (SHA-256)."""
    return hashlib.sha256(data).hexdigest()


def crc32_of(data: bytes) -> int:
    """CRC-32 of record payload bytes, as an unsigned 32-bit int."""
    return zlib.crc32(data) & 0xFFFFFFFF
