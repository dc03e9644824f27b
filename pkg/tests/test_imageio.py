import numpy as np
import pytest

from hmmdetect.imageio import PGMError, read_pgm, read_raw, write_pgm, write_raw


def test_pgm_roundtrip(tmp_path, rng):
    img = rng.integers(0, 256, (7, 11)).astype(float)
    write_pgm(tmp_path / "a.pgm", img)
    np.testing.assert_array_equal(read_pgm(tmp_path / "a.pgm"), img)


def test_pgm_rounds_and_clips(tmp_path):
    write_pgm(tmp_path / "a.pgm", np.array([[-3.0, 12.4, 12.6, 300.0]]))
    np.testing.assert_array_equal(read_pgm(tmp_path / "a.pgm"), [[0, 12, 13, 255]])


def test_pgm_header_comments(tmp_path):
    (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([7, 9]))
    np.testing.assert_array_equal(read_pgm(tmp_path / "c.pgm"), [[7, 9]])


@pytest.mark.parametrize("data", [
    b"P2\n2 1\n255\n1 2",
    b"P5\n2 2\n255\n" + bytes(3),
    b"P5\n2 1\n65535\n" + bytes(4),
    b"P5\n2",
])
def test_pgm_rejects_bad_files(tmp_path, data):
    (tmp_path / "bad.pgm").write_bytes(data)
    with pytest.raises(PGMError):
        read_pgm(tmp_path / "bad.pgm")


def test_raw_roundtrip(tmp_path, rng):
    img = rng.normal(size=(3, 5))
    write_raw(tmp_path / "a.raw", img, extra=[0.25])
    data = (tmp_path / "a.raw").read_bytes()
    assert data[:8] == (5).to_bytes(4, "little") + (3).to_bytes(4, "little")
    assert len(data) == 8 + 8 * 16
    back, extra = read_raw(tmp_path / "a.raw", n_extra=1)
    np.testing.assert_array_equal(back, img)
    assert extra.tolist() == [0.25]
    with pytest.raises(ValueError):
        read_raw(tmp_path / "a.raw")
