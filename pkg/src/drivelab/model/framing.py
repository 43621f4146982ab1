"""Binary framing of journal records inside chunk files.

A chunk is a concatenation of frames:

    [u32 BE payload length][payload bytes][u32 BE CRC-32 of payload]

where the payload is one canonical JSON record (see records.dump_record).
The framing is shared verbatim by the on-disk journal and the upload wire
format: what the client journals is byte-for-byte what the server stores.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator

from drivelab.model.digest import crc32_of

_LEN = struct.Struct(">I")
_CRC = struct.Struct(">I")
FRAME_OVERHEAD = _LEN.size + _CRC.size

# Refuse absurd frame lengths when scanning possibly-corrupt tails.
MAX_PAYLOAD_BYTES = 16 * 1024 * 1024


class FrameError(ValueError):
    """A frame failed its length or CRC check."""


@dataclass(frozen=True)
class Frame:
    payload: bytes
    offset: int  # byte offset of the frame start within the chunk

    @property
    def size(self) -> int:
        return FRAME_OVERHEAD + len(self.payload)


def encode_frame(payload: bytes) -> bytes:
    return _LEN.pack(len(payload)) + payload + _CRC.pack(crc32_of(payload))


def iter_frames(data: bytes, strict: bool = True) -> Iterator[Frame]:
    """Yield frames from chunk bytes.

    strict=True raises FrameError on any malformed frame (server-side
    validation). strict=False stops at the first invalid or partial
    frame instead, yielding only the valid prefix (crash recovery).
    """
    pos = 0
    n = len(data)
    while pos < n:
        if pos + _LEN.size > n:
            if strict:
                raise FrameError(f"truncated length prefix at offset {pos}")
            return
        (length,) = _LEN.unpack_from(data, pos)
        end = pos + _LEN.size + length + _CRC.size
        if length > MAX_PAYLOAD_BYTES or end > n:
            if strict:
                raise FrameError(f"truncated frame at offset {pos}")
            return
        payload = data[pos + _LEN.size : pos + _LEN.size + length]
        (crc,) = _CRC.unpack_from(data, end - _CRC.size)
        if crc != crc32_of(payload):
            if strict:
                raise FrameError(f"CRC mismatch at offset {pos}")
            return
        yield Frame(payload=payload, offset=pos)
        pos = end


def valid_prefix_length(data: bytes) -> int:
    """Byte length of the longest CRC-valid frame prefix of `data`."""
    end = 0
    for frame in iter_frames(data, strict=False):
        end = frame.offset + frame.size
    return end
