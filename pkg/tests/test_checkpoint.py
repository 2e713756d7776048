import struct

import numpy as np
import pytest

from sparse_support.autoencoder import init_decoder, init_matrix
from sparse_support.checkpoint import load_checkpoint, save_checkpoint
from sparse_support.exceptions import FormatError


@pytest.fixture
def model(rng):
    return init_matrix(4, 10, rng), init_decoder(10, 4, 16, rng)


def test_round_trip_is_bitwise(tmp_path, model):
    A, W = model
    path = tmp_path / "m.ssae"
    save_checkpoint(path, A, W, 0.37)
    A2, W2, r = load_checkpoint(path)
    assert A2 == A and r == 0.37
    for k, v in W.as_dict().items():
        np.testing.assert_array_equal(W2.as_dict()[k], v)


def test_truncated_file(tmp_path, model):
    path = tmp_path / "m.ssae"
    save_checkpoint(path, *model)
    path.write_bytes(path.read_bytes()[:-9])
    with pytest.raises(FormatError) as exc:
        load_checkpoint(path)
    assert exc.value.field


def test_trailing_bytes(tmp_path, model):
    path = tmp_path / "m.ssae"
    save_checkpoint(path, *model)
    path.write_bytes(path.read_bytes() + b"\0")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_bad_magic_and_version(tmp_path, model):
    path = tmp_path / "m.ssae"
    save_checkpoint(path, *model)
    raw = bytearray(path.read_bytes())
    path.write_bytes(b"XXXXX" + raw[5:])
    with pytest.raises(FormatError) as exc:
        load_checkpoint(path)
    assert exc.value.field == "magic"
    raw[5:9] = struct.pack("<I", 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError) as exc:
        load_checkpoint(path)
    assert exc.value.field == "version"


def test_shape_guard(tmp_path, model):
    path = tmp_path / "m.ssae"
    save_checkpoint(path, *model)
    load_checkpoint(path, expect_shape=(10, 4, None))
    with pytest.raises(FormatError):
        load_checkpoint(path, expect_shape=(10, 5, 16))


def test_header_only(tmp_path):
    path = tmp_path / "m.ssae"
    path.write_bytes(b"SSAE")
    with pytest.raises(FormatError):
        load_checkpoint(path)
