"""Binary 8-bit PGM (P5) codec.

The writer always emits the canonical header "P5\\n<w> <h>\\n255\\n" followed by the
raw row-major payload, so equal images give byte-identical files.
"""
import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from imaging.raster import GrayImage
from utils.errors import FormatError

logger = logging.getLogger(__name__)

MAGIC = b"P5"
WHITESPACE = b" \t\r\n\v\f"


def encode_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(img.pixels, dtype=np.uint8).tobytes()


def _header_fields(data: bytes) -> Tuple[List[Tuple[int, int]], int]:
    """Width, height and maxval with their byte offsets, plus the payload offset."""
    fields: List[Tuple[int, int]] = []
    pos = len(MAGIC)
    while len(fields) < 3:
        if pos >= len(data):
            raise FormatError("header ends early", pos)
        byte = data[pos:pos + 1]
        if byte in WHITESPACE:
            pos += 1
            continue
        if byte == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise FormatError("unterminated header comment", pos)
            pos = end + 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise FormatError(f"expected a decimal number, found {byte!r}", start)
        fields.append((int(data[start:pos]), start))
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or data[pos:pos + 1] not in WHITESPACE:
        raise FormatError("missing whitespace after maxval", pos)
    return fields, pos + 1


def decode_pgm(data: bytes) -> GrayImage:
    if data[:2] != MAGIC:
        raise FormatError(f"not a binary PGM (magic {data[:2]!r})", 0)
    fields, payload_at = _header_fields(data)
    (width, w_off), (height, h_off), (maxval, m_off) = fields
    if width <= 0:
        raise FormatError(f"nonpositive width {width}", w_off)
    if height <= 0:
        raise FormatError(f"nonpositive height {height}", h_off)
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval} (only 255)", m_off)
    expected = width * height
    payload = data[payload_at:payload_at + expected]
    if len(payload) < expected:
        raise FormatError(f"truncated payload: {len(payload)} of {expected} bytes", len(data))
    if len(data) > payload_at + expected:
        logger.debug(f"ignoring {len(data) - payload_at - expected} trailing bytes after PGM payload")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()
    return GrayImage(pixels)


def read_pgm(path: Union[str, Path]) -> GrayImage:
    return decode_pgm(Path(path).read_bytes())


def write_pgm(img: GrayImage, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_pgm(img))
    return path
