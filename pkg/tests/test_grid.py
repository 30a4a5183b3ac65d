"""Grid types, ASCII grid I/O, rendering, synthetic terrain."""

import numpy as np
import pytest

from floodflow.grid import (DemGrid, FloodMap, GridFormatError, RasterRender,
                            load_ascii_grid, load_flood_map, render_depth,
                            save_ascii_grid, save_pgm, synth_dem)


def write(path, text):
    path.write_text(text)
    return path


VALID_2X2 = """ncols 2
nrows 2
xllcorner 0
yllcorner 0
cellsize 10
NODATA_value -9999
1 2
3 -9999
"""


class TestParsing:
    def test_valid_grid(self, tmp_path):
        dem = load_ascii_grid(write(tmp_path / "a.asc", VALID_2X2))
        assert dem.shape == (2, 2)
        assert dem.cell_size == 10.0
        assert dem.nodata == -9999.0
        np.testing.assert_array_equal(dem.elevations, [[1.0, 2.0], [3.0, -9999.0]])
        np.testing.assert_array_equal(dem.active_mask, [[True, True], [True, False]])

    def test_row_length_mismatch_names_row_and_line(self, tmp_path):
        bad = VALID_2X2.replace("3 -9999", "3")
        with pytest.raises(GridFormatError, match=r"line 8.*row 2"):
            load_ascii_grid(write(tmp_path / "a.asc", bad))

    def test_wrong_header_key_names_line(self, tmp_path):
        bad = VALID_2X2.replace("xllcorner 0", "xcorner 0")
        with pytest.raises(GridFormatError, match="line 3"):
            load_ascii_grid(write(tmp_path / "a.asc", bad))

    def test_non_numeric_token_names_line(self, tmp_path):
        bad = VALID_2X2.replace("1 2", "1 oops")
        with pytest.raises(GridFormatError, match="line 7.*oops"):
            load_ascii_grid(write(tmp_path / "a.asc", bad))

    def test_non_numeric_header_value(self, tmp_path):
        bad = VALID_2X2.replace("cellsize 10", "cellsize ten")
        with pytest.raises(GridFormatError, match="line 5"):
            load_ascii_grid(write(tmp_path / "a.asc", bad))

    def test_missing_rows(self, tmp_path):
        bad = VALID_2X2.replace("3 -9999\n", "")
        with pytest.raises(GridFormatError, match="expected 2 data rows, found 1"):
            load_ascii_grid(write(tmp_path / "a.asc", bad))

    def test_truncated_header(self, tmp_path):
        with pytest.raises(GridFormatError, match="truncated header"):
            load_ascii_grid(write(tmp_path / "a.asc", "ncols 2\nnrows 2\n"))


class TestWriting:
    def test_single_cell_exact_text(self, tmp_path):
        dem = DemGrid(elevations=np.array([[5.0]]), cell_size=20.0)
        path = tmp_path / "one.asc"
        save_ascii_grid(dem, path)
        assert path.read_text() == (
            "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 20\n"
            "NODATA_value -9999\n5\n"
        )

    def test_roundtrip_identity(self, tmp_path):
        rng = np.random.default_rng(42)
        for trial in range(20):
            elev = rng.uniform(-50, 50, size=(rng.integers(1, 12), rng.integers(1, 12)))
            if trial % 3 == 0:
                mask = rng.random(elev.shape) < 0.2
                elev[mask] = -9999.0
            dem = DemGrid(elevations=elev, cell_size=float(rng.uniform(0.5, 30)),
                          xllcorner=float(rng.uniform(-5, 5)), yllcorner=float(rng.uniform(-5, 5)))
            path = tmp_path / f"rt{trial}.asc"
            save_ascii_grid(dem, path)
            back = load_ascii_grid(path)
            np.testing.assert_array_equal(back.elevations, dem.elevations)
            assert back.cell_size == dem.cell_size
            assert back.nodata == dem.nodata
            assert back.xllcorner == dem.xllcorner
            assert back.yllcorner == dem.yllcorner

    def test_nodata_cells_serialized_with_sentinel(self, tmp_path):
        dem = DemGrid(elevations=np.array([[1.0, -9999.0]]))
        path = tmp_path / "nd.asc"
        save_ascii_grid(dem, path)
        assert path.read_text().splitlines()[-1] == "1 -9999"

    def test_flood_map_roundtrip(self, tmp_path):
        flood = FloodMap(depths=np.array([[0.0, 0.125], [2.5, 0.1]]), cell_size=20.0)
        path = tmp_path / "f.asc"
        save_ascii_grid(flood, path)
        back = load_flood_map(path)
        np.testing.assert_array_equal(back.depths, flood.depths)
        assert back.cell_size == 20.0

    def test_flood_map_rejects_nodata_cells(self, tmp_path):
        path = write(tmp_path / "f.asc",
                     "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                     "NODATA_value -9999\n-9999\n")
        with pytest.raises(GridFormatError, match="nodata cell"):
            load_flood_map(path)


class TestTypes:
    def test_negative_depth_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            FloodMap(depths=np.array([[-0.1]]))

    def test_non_finite_depth_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            FloodMap(depths=np.array([[np.nan]]))

    def test_non_finite_elevation_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            DemGrid(elevations=np.array([[np.inf]]))

    def test_bad_cell_size_rejected(self):
        with pytest.raises(ValueError, match="cell_size"):
            DemGrid(elevations=np.array([[1.0]]), cell_size=0.0)

    def test_arrays_are_immutable(self):
        dem = DemGrid(elevations=np.array([[1.0]]))
        with pytest.raises(ValueError):
            dem.elevations[0, 0] = 2.0


class TestRender:
    def test_worked_values(self):
        flood = FloodMap(depths=np.array([[0.0, 0.30, 5.0]]))
        render = render_depth(flood)
        np.testing.assert_array_equal(render.pixels, [[255, 225, 0]])

    def test_clamps_at_black(self):
        flood = FloodMap(depths=np.array([[2.55, 2.56, 100.0]]))
        np.testing.assert_array_equal(render_depth(flood).pixels, [[0, 0, 0]])

    def test_deeper_never_brighter(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            base = rng.uniform(0, 3, size=(6, 6))
            deeper = base + rng.uniform(0, 1, size=(6, 6))
            a = render_depth(FloodMap(depths=base)).pixels
            b = render_depth(FloodMap(depths=deeper)).pixels
            assert (b <= a).all()

    def test_pgm_bytes(self, tmp_path):
        render = RasterRender(pixels=np.arange(6, dtype=np.uint8).reshape(2, 3))
        path = tmp_path / "img.pgm"
        save_pgm(render, path)
        data = path.read_bytes()
        assert data.startswith(b"P5\n3 2\n255\n")
        assert data[len(b"P5\n3 2\n255\n"):] == bytes(range(6))


class TestSynth:
    def test_flat_constant(self):
        dem = synth_dem("flat", 4, 4, z=10.0)
        np.testing.assert_array_equal(dem.elevations, np.full((4, 4), 10.0))

    def test_bowl_minimum_at_center(self):
        dem = synth_dem("bowl", 9, 9, relief=5.0)
        assert np.argmin(dem.elevations) == 9 * 4 + 4
        assert dem.elevations[0, 0] == pytest.approx(5.0)

    def test_slope_falls_west_to_east(self):
        dem = synth_dem("slope", 3, 5, z=1.0, relief=4.0)
        assert dem.elevations[0, 0] == pytest.approx(5.0)
        assert dem.elevations[0, -1] == pytest.approx(1.0)
        assert (np.diff(dem.elevations, axis=1) < 0).all()

    def test_channel_strip_is_lower(self):
        dem = synth_dem("channel", 8, 8, relief=2.0, channel_depth=1.5, channel_width=2)
        strip = dem.elevations[3:5, :]
        outside = dem.elevations[0, :]
        assert (strip < outside).all()

    def test_seed_determinism(self):
        a = synth_dem("bowl", 6, 6, seed=3, noise=0.5)
        b = synth_dem("bowl", 6, 6, seed=3, noise=0.5)
        c = synth_dem("bowl", 6, 6, seed=4, noise=0.5)
        np.testing.assert_array_equal(a.elevations, b.elevations)
        assert not np.array_equal(a.elevations, c.elevations)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown terrain kind"):
            synth_dem("volcano", 4, 4)
