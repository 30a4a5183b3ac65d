"""Rainfall scenario generation and CSV round trips."""

import numpy as np
import pytest

from floodflow.rainfall import (HOURS, RainfallSeries, cumulative,
                                gen_nonuniform, gen_uniform, hyetograph_shape,
                                load_event_csv, save_event_csv)


class TestUniform:
    def test_spreads_total_evenly(self):
        series = gen_uniform(240.0)
        np.testing.assert_array_equal(series.hourly, np.full(HOURS, 10.0))
        assert series.category == "uniform"
        assert series.total == pytest.approx(240.0)

    def test_small_total(self):
        np.testing.assert_array_equal(gen_uniform(24.0).hourly, np.ones(HOURS))

    def test_zero_total(self):
        assert gen_uniform(0.0).total == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            gen_uniform(-1.0)


class TestNonuniform:
    def test_total_preserved(self):
        for seed, total in [(0, 24.0), (1, 100.0), (2, 720.0), (3, 5.5)]:
            series = gen_nonuniform(total, seed=seed)
            assert series.total == pytest.approx(total, rel=1e-12)
            assert series.category == "nonuniform"

    def test_shuffle_preserves_multiset(self):
        shape = hyetograph_shape(300.0, peak_hour_mean=12.0, spread=4.0)
        series = gen_nonuniform(300.0, seed=9, peak_hour_mean=12.0, spread=4.0)
        np.testing.assert_array_equal(np.sort(series.hourly), np.sort(shape))
        assert not np.array_equal(series.hourly, shape)  # seed 9 does permute

    def test_shape_peaks_at_mean(self):
        shape = hyetograph_shape(100.0, peak_hour_mean=12.0, spread=4.0)
        assert np.argmax(shape) == 11  # hour 12
        assert (shape > 0).all()

    def test_seed_determinism(self):
        a = gen_nonuniform(150.0, seed=4)
        b = gen_nonuniform(150.0, seed=4)
        c = gen_nonuniform(150.0, seed=5)
        np.testing.assert_array_equal(a.hourly, b.hourly)
        assert not np.array_equal(a.hourly, c.hourly)


class TestSeriesType:
    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            RainfallSeries(hourly=np.ones(23), category="real")

    def test_negative_hour_named(self):
        hourly = np.ones(HOURS)
        hourly[4] = -2.0
        with pytest.raises(ValueError, match="hour 5"):
            RainfallSeries(hourly=hourly, category="real")

    def test_bad_category_rejected(self):
        with pytest.raises(ValueError, match="category"):
            RainfallSeries(hourly=np.ones(HOURS), category="synthetic")


class TestCumulative:
    def test_uniform_midpoint(self):
        assert cumulative(gen_uniform(240.0), 12) == pytest.approx(120.0)

    def test_full_window_is_total(self):
        series = gen_nonuniform(333.0, seed=2)
        assert cumulative(series, HOURS) == pytest.approx(series.total)

    def test_zero_series(self):
        assert cumulative(gen_uniform(0.0), 7) == 0.0

    def test_monotone_in_hour(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            series = RainfallSeries(hourly=rng.uniform(0, 20, HOURS), category="real")
            values = [cumulative(series, h) for h in range(1, HOURS + 1)]
            assert all(b >= a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("hour", [0, 25, -1])
    def test_out_of_range_hour_rejected(self, hour):
        with pytest.raises(ValueError, match="through_hour"):
            cumulative(gen_uniform(10.0), hour)


class TestCsv:
    def test_roundtrip(self, tmp_path):
        series = gen_nonuniform(123.4, seed=8)
        path = tmp_path / "storm.csv"
        save_event_csv(series, path)
        back = load_event_csv(path)
        np.testing.assert_array_equal(back.hourly, series.hourly)
        assert back.category == "real"
        assert back.label == "storm"

    def test_format_shape(self, tmp_path):
        path = tmp_path / "u.csv"
        save_event_csv(gen_uniform(24.0), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "hour,mm"
        assert len(lines) == 1 + HOURS
        assert lines[1] == "1,1"
        assert lines[-1] == "24,1"

    def test_wrong_row_count(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("hour,mm\n" + "".join(f"{h},1.0\n" for h in range(1, 24)))
        with pytest.raises(ValueError, match="expected 24 data rows, found 23"):
            load_event_csv(path)

    def test_negative_value_names_hour(self, tmp_path):
        rows = [f"{h},1.0" for h in range(1, 25)]
        rows[6] = "7,-0.5"
        path = tmp_path / "neg.csv"
        path.write_text("hour,mm\n" + "\n".join(rows) + "\n")
        with pytest.raises(ValueError, match="hour 7.*negative"):
            load_event_csv(path)

    def test_non_numeric_token_names_line(self, tmp_path):
        rows = [f"{h},1.0" for h in range(1, 25)]
        rows[2] = "3,abc"
        path = tmp_path / "bad.csv"
        path.write_text("hour,mm\n" + "\n".join(rows) + "\n")
        with pytest.raises(ValueError, match="line 4"):
            load_event_csv(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("time,rain\n" + "".join(f"{h},1.0\n" for h in range(1, 25)))
        with pytest.raises(ValueError, match="line 1"):
            load_event_csv(path)

    def test_wrong_hour_sequence(self, tmp_path):
        rows = [f"{h},1.0" for h in range(1, 25)]
        rows[5] = "9,1.0"
        path = tmp_path / "seq.csv"
        path.write_text("hour,mm\n" + "\n".join(rows) + "\n")
        with pytest.raises(ValueError, match="expected hour 6"):
            load_event_csv(path)
