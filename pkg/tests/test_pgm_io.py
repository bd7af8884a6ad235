import numpy as np
import pytest

from imaging.raster import GrayImage
from utils.errors import FormatError
from utils.pgm_io import decode_pgm, encode_pgm, read_pgm, write_pgm


def test_canonical_encoding():
    data = encode_pgm(GrayImage(np.array([[0, 255]])))
    assert data == b"P5\n2 1\n255\n\x00\xff"
    assert len(data) == 13


def test_file_round_trip(tmp_path):
    img = GrayImage(np.random.default_rng(4).integers(0, 256, (7, 5)))
    path = write_pgm(img, tmp_path / "sub" / "img.pgm")
    back = read_pgm(path)
    assert back.shape == (7, 5)
    assert np.array_equal(back.pixels, img.pixels)
    assert path.read_bytes() == encode_pgm(back)


def test_header_comments_and_whitespace():
    img = decode_pgm(b"P5 # made by hand\n3\t2\r\n# maxval next\n255\n" + bytes(range(6)))
    assert img.pixels.tolist() == [[0, 1, 2], [3, 4, 5]]


def test_trailing_bytes_are_ignored():
    assert decode_pgm(b"P5\n1 1\n255\n\x07extra").pixels.tolist() == [[7]]


def test_bad_magic():
    with pytest.raises(FormatError) as info:
        decode_pgm(b"P2\n1 1\n255\n0")
    assert info.value.offset == 0


def test_sixteen_bit_maxval_rejected():
    with pytest.raises(FormatError) as info:
        decode_pgm(b"P5\n2 1\n65535\n\x00\x00\x00\x00")
    assert info.value.offset == 7
    assert "maxval" in str(info.value)


def test_truncated_payload():
    data = b"P5\n4 4\n255\n" + bytes(10)
    with pytest.raises(FormatError) as info:
        decode_pgm(data)
    assert info.value.offset == len(data)


@pytest.mark.parametrize(
    "data",
    [b"P5\n0 2\n255\n", b"P5\n2", b"P5\nx 2\n255\n", b"P5\n1 1\n255"],
)
def test_malformed_headers(data):
    with pytest.raises(FormatError):
        decode_pgm(data)
