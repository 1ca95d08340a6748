import warnings
from pathlib import Path

import numpy as np
import pytest

from pcdecimate.errors import (
    PcdBodyError,
    PcdError,
    PcdHeaderError,
    PcdTruncatedError,
    PcdUnsupportedError,
)
from pcdecimate.pcd import NonFinitePointsWarning, format_header, read_pcd, write_pcd

DATA = Path(__file__).parent / "data"


def _header(**over):
    fields = {
        "FIELDS": "x y z",
        "SIZE": "4 4 4",
        "TYPE": "F F F",
        "COUNT": "1 1 1",
        "WIDTH": "2",
        "HEIGHT": "1",
        "POINTS": "2",
        "DATA": "ascii",
    }
    fields.update(over)
    lines = ["VERSION 0.7"] + [f"{k} {v}" for k, v in fields.items() if v is not None]
    return ("\n".join(lines) + "\n").encode()


def test_golden_ascii_read_skips_extra_fields():
    cloud = read_pcd(DATA / "three_points_ascii.pcd")
    expected = np.array(
        [[0.5, -1.25, 2.0], [1e-3, 3.140625, -0.0625], [100.0, 0.0, -7.75]], dtype=np.float32
    )
    assert cloud.dtype == np.float32
    np.testing.assert_array_equal(cloud, expected)


def test_golden_ascii_write(tmp_path):
    cloud = np.array([[0.5, -1.25, 2.0], [0.1, np.pi, -0.0625], [100.0, 0.0, -7.75]], dtype=np.float32)
    out = tmp_path / "three.pcd"
    write_pcd(cloud, out, mode="ascii")
    assert out.read_bytes() == (DATA / "three_points_written.pcd").read_bytes()


def test_binary_round_trip_is_bitwise(tmp_path, rng):
    cloud = (rng.standard_normal((100_000, 3)) * 50).astype(np.float32)
    path = tmp_path / "big.pcd"
    write_pcd(cloud, path)
    back = read_pcd(path)
    assert back.tobytes() == cloud.tobytes()


def test_ascii_round_trip_exact(tmp_path, rng):
    cloud = (rng.standard_normal((2000, 3)) * 1e3).astype(np.float32)
    cloud[:5] = [[1e-30, -3e38, 0], [np.float32(1 / 3), 7, -0.0], [1, 2, 3], [4, 5, 6], [1e-7, 1e7, 12345.678]]
    path = tmp_path / "a.pcd"
    write_pcd(cloud, path, mode="ascii")
    np.testing.assert_array_equal(read_pcd(path), cloud)


def test_binary_header_layout(tmp_path):
    path = tmp_path / "h.pcd"
    write_pcd(np.ones((4, 3), dtype=np.float32), path)
    raw = path.read_bytes()
    head = format_header(4, "binary").encode()
    assert raw.startswith(head)
    assert len(raw) == len(head) + 4 * 12
    keys = [line.split()[0] for line in head.decode().splitlines() if not line.startswith("#")]
    assert keys == ["VERSION", "FIELDS", "SIZE", "TYPE", "COUNT", "WIDTH", "HEIGHT", "VIEWPOINT", "POINTS", "DATA"]


@pytest.mark.parametrize("mode", ["ascii", "binary"])
def test_empty_cloud(tmp_path, mode):
    path = tmp_path / "empty.pcd"
    write_pcd(np.zeros((0, 3), dtype=np.float32), path, mode=mode)
    text = path.read_bytes().decode()
    assert "WIDTH 0\n" in text and "POINTS 0\n" in text
    assert text.endswith(f"DATA {mode}\n")
    assert read_pcd(path).shape == (0, 3)


def test_nan_point_dropped_with_one_warning(tmp_path):
    rows = [f"{i} {i * 0.5} {-i}" for i in range(10)]
    rows[4] = "nan 1 2"
    path = tmp_path / "nan.pcd"
    path.write_bytes(_header(WIDTH="10", POINTS="10") + ("\n".join(rows) + "\n").encode())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cloud = read_pcd(path)
    hits = [w for w in caught if issubclass(w.category, NonFinitePointsWarning)]
    assert len(hits) == 1
    assert hits[0].message.count == 1
    assert cloud.shape == (9, 3)
    assert not np.isin(4.0, cloud[:, 0])


def test_binary_with_extra_fields(tmp_path):
    dtype = np.dtype([("i", "<u2"), ("x", "<f4"), ("n", "<f8", (2,)), ("y", "<f4"), ("z", "<f4")])
    rec = np.zeros(3, dtype=dtype)
    rec["x"], rec["y"], rec["z"] = [1, 2, 3], [4, 5, 6], [7, 8, 9]
    rec["n"] = 99.0
    path = tmp_path / "mixed.pcd"
    head = _header(FIELDS="i x n y z", SIZE="2 4 8 4 4", TYPE="U F F F F", COUNT="1 1 2 1 1",
                   WIDTH="3", POINTS="3", DATA="binary")
    path.write_bytes(head + rec.tobytes())
    np.testing.assert_array_equal(read_pcd(path), [[1, 4, 7], [2, 5, 8], [3, 6, 9]])


class TestErrors:
    def write(self, tmp_path, data):
        path = tmp_path / "bad.pcd"
        path.write_bytes(data)
        return path

    def test_unknown_key_reports_offset(self, tmp_path):
        head = _header()
        data = head.replace(b"HEIGHT", b"HEIGTH")
        with pytest.raises(PcdHeaderError) as err:
            read_pcd(self.write(tmp_path, data + b"1 2 3\n4 5 6\n"))
        assert err.value.offset == data.index(b"HEIGTH")
        assert f"(at byte {err.value.offset})" in str(err.value)

    def test_missing_data_line(self, tmp_path):
        with pytest.raises(PcdHeaderError):
            read_pcd(self.write(tmp_path, b"VERSION 0.7\nFIELDS x y z\n"))

    def test_points_mismatch(self, tmp_path):
        with pytest.raises(PcdHeaderError):
            read_pcd(self.write(tmp_path, _header(POINTS="5") + b"1 2 3\n4 5 6\n"))

    def test_truncated_binary(self, tmp_path):
        data = _header(DATA="binary") + np.ones(5, dtype="<f4").tobytes()
        with pytest.raises(PcdTruncatedError) as err:
            read_pcd(self.write(tmp_path, data))
        assert err.value.offset == len(data)

    def test_truncated_ascii(self, tmp_path):
        data = _header() + b"1 2 3\n"
        with pytest.raises(PcdTruncatedError) as err:
            read_pcd(self.write(tmp_path, data))
        assert err.value.offset == len(data)

    def test_short_ascii_row(self, tmp_path):
        data = _header() + b"1 2 3\n4 5\n"
        with pytest.raises(PcdTruncatedError):
            read_pcd(self.write(tmp_path, data))

    def test_double_coordinates_unsupported(self, tmp_path):
        data = _header(SIZE="8 8 8") + b"1 2 3\n4 5 6\n"
        with pytest.raises(PcdUnsupportedError) as err:
            read_pcd(self.write(tmp_path, data))
        assert err.value.offset == data.index(b"TYPE")

    def test_compressed_unsupported(self, tmp_path):
        with pytest.raises(PcdUnsupportedError):
            read_pcd(self.write(tmp_path, _header(DATA="binary_compressed") + b"\0" * 64))

    def test_missing_axis(self, tmp_path):
        data = _header(FIELDS="x y w") + b"1 2 3\n4 5 6\n"
        with pytest.raises(PcdUnsupportedError):
            read_pcd(self.write(tmp_path, data))

    def test_garbage_value(self, tmp_path):
        data = _header() + b"1 2 3\n4 five 6\n"
        with pytest.raises(PcdBodyError) as err:
            read_pcd(self.write(tmp_path, data))
        assert err.value.offset == data.index(b"4 five")

    def test_error_classes_are_distinct(self):
        classes = {PcdHeaderError, PcdTruncatedError, PcdUnsupportedError, PcdBodyError}
        assert len(classes) == 4
        assert all(issubclass(c, PcdError) for c in classes)


def test_bad_write_mode(tmp_path):
    with pytest.raises(ValueError):
        write_pcd(np.zeros((1, 3), dtype=np.float32), tmp_path / "x.pcd", mode="text")
