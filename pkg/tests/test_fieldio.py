import json

import numpy as np
import pytest

from pasf import Field, read_field, write_field
from pasf.fieldio import FieldFormatError, emit_heatmaps, read_ppm, write_pcs_csv


def write_text(path, text):
    path.write_text(text)
    return path


class TestFieldFiles:
    def test_minimal(self, tmp_path):
        p = write_text(tmp_path / "a.field", "# pasf-field v1\n# grid_h=1 grid_w=1 n=1\n0\n")
        f = read_field(p)
        assert f.shape == (1, 1) and f.n == 1 and f.data[0, 0] == 0

    def test_roundtrip_bitwise(self, tmp_path, rng):
        vals = rng.standard_normal((5, 5, 10)) * 10.0 ** rng.integers(-20, 20, (5, 5, 10))
        f = Field.from_grid(vals)
        write_field(f, tmp_path / "r.field")
        g = read_field(tmp_path / "r.field")
        assert g.shape == (5, 5)
        np.testing.assert_array_equal(g.data, f.data)
        np.testing.assert_array_equal(g.grid(), vals)

    def test_short_body_names_line(self, tmp_path):
        p = write_text(tmp_path / "s.field", "# pasf-field v1\n# grid_h=1 grid_w=2 n=3\n1,2\n3,4\n")
        with pytest.raises(FieldFormatError, match=r":4:"):
            read_field(p)

    @pytest.mark.parametrize(
        "text,where",
        [
            ("# pasf-field v1\n# grid_h=1 grid_w=2 n=2\n1,2\n3\n", ":4:"),
            ("# pasf-field v1\n# grid_h=1 grid_w=2 n=1\n1,x\n", ":3:"),
            ("# pasf-field v1\n# grid_h=1 grid_w=1 n=1\nnan\n", ":3:"),
            ("# pasf-field v1\n# grid_h=1 grid_w=1 n=1\n1\n2\n", ":4:"),
            ("1,2\n", ":1:"),
        ],
    )
    def test_errors_carry_line_numbers(self, tmp_path, text, where):
        with pytest.raises(FieldFormatError, match=where):
            read_field(write_text(tmp_path / "e.field", text))

    def test_missing_dims(self, tmp_path):
        with pytest.raises(FieldFormatError):
            read_field(write_text(tmp_path / "d.field", "# pasf-field v1\n1\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_field(tmp_path / "nope.field")

    def test_field_validation(self):
        with pytest.raises(ValueError):
            Field(np.zeros((3, 4)), 2, 2)
        with pytest.raises(ValueError):
            Field(np.array([[np.inf]]), 1, 1)

    def test_pcs_csv(self, tmp_path):
        write_pcs_csv(np.array([[1.0, 2.0], [3.0, 4.0]]), tmp_path / "p.csv")
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines == ["t,channel_1,channel_2", "1,1,3", "2,2,4"]


class TestHeatmaps:
    def test_zero_field_is_mid_scale(self, tmp_path):
        (p,) = emit_heatmaps(Field(np.zeros((6, 1)), 2, 3), 1, 1, tmp_path / "z_")
        img = read_ppm(p)
        assert img.shape == (2, 3, 3)
        assert np.all(img == 255)

    def test_constant_field_is_uniform(self, tmp_path):
        (p,) = emit_heatmaps(Field(np.full((6, 1), 3.0), 2, 3), 1, 1, tmp_path / "c_")
        img = read_ppm(p)
        assert np.all(img == img[0, 0])

    def test_single_hot_cell(self, tmp_path):
        data = np.zeros((9, 1))
        data[4] = 2.0
        (p,) = emit_heatmaps(Field(data, 3, 3), 1, 1, tmp_path / "h_")
        img = read_ppm(p).reshape(9, 3)
        assert tuple(img[4]) == (178, 24, 43)
        assert np.all(np.delete(img, 4, axis=0) == 255)

    def test_five_frames_shared_scale(self, tmp_path):
        data = np.arange(4 * 8, dtype=float).reshape(4, 8) - 10
        paths = emit_heatmaps(Field(data, 2, 2), 1, 5, tmp_path / "frames" / "t_", upscale=3)
        assert len(paths) == 5 and all(p.exists() for p in paths)
        side = json.loads((tmp_path / "frames" / "t_scale.json").read_text())
        assert side["vmax"] == pytest.approx(np.abs(data[:, :5]).max()) and side["vmin"] == -side["vmax"]
        assert read_ppm(paths[0]).shape == (6, 6, 3)

    def test_range_checked(self, tmp_path):
        f = Field(np.zeros((1, 3)), 1, 1)
        for a, b in [(0, 2), (2, 4), (3, 2)]:
            with pytest.raises(ValueError):
                emit_heatmaps(f, a, b, tmp_path / "x_")
