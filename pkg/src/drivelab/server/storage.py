"""Encrypted-at-rest chunk storage.

Every chunk is sealed with AES-256-GCM under the service master key and
a fresh random nonce; the file is nonce || ciphertext. Decryption
verifies authenticity first, then the plaintext digest recorded at
ingest time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from drivelab.model.digest import checksum

NONCE_BYTES = 12


class TamperedError(Exception):
    """Authentication or digest check failed on a stored chunk."""


@dataclass(frozen=True)
class StoredChunk:
    stream: str
    index: int
    plaintext_digest: str
    byte_length: int


class ChunkVault:
    def __init__(self, master_key: bytes):
        if len(master_key) != 32:
            raise ValueError("master key must be 32 bytes (256 bits)")
        self._aead = AESGCM(master_key)

    def encrypt(self, data: bytes) -> bytes:
        nonce = os.urandom(NONCE_BYTES)
        return nonce + self._aead.encrypt(nonce, data, None)

    def decrypt(self, blob: bytes, expected_digest: Optional[str] = None) -> bytes:
        if len(blob) < NONCE_BYTES + 16:
            raise TamperedError("stored chunk too short to be authentic")
        nonce, ciphertext = blob[:NONCE_BYTES], blob[NONCE_BYTES:]
        try:
            data = self._aead.decrypt(nonce, ciphertext, None)
        except InvalidTag:
            raise TamperedError("TAMPERED: authentication failed") from None
        if expected_digest is not None and checksum(data) != expected_digest:
            raise TamperedError("TAMPERED: plaintext digest mismatch")
        return data

    def seal_to(self, path: Path, data: bytes) -> None:
        path.write_bytes(self.encrypt(data))

    def open_from(self, path: Path, expected_digest: Optional[str] = None) -> bytes:
        return self.decrypt(path.read_bytes(), expected_digest)


def master_key_from_hex(hex_key: str) -> bytes:
    key = bytes.fromhex(hex_key)
    if len(key) != 32:
        raise ValueError("MASTER_KEY must be 64 hex chars (256 bits)")
    return key
