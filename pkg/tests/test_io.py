import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vfshm import DataError, FrequencyGrid, FrequencyResponse, ParseError, rmsd, windowed_metric
from vfshm import io


def write(tmp_path, text, name="m.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadMeasurement:
    def test_three_rows(self, tmp_path):
        p = write(tmp_path, "frequency_hz,re_z,im_z\n100,1.0,-2.0\n200,1.1,-1.9\n300,1.2,-1.8\n")
        H = io.load_measurement(p)
        np.testing.assert_array_equal(H.frequencies, [100, 200, 300])
        np.testing.assert_array_equal(H.values, [1 - 2j, 1.1 - 1.9j, 1.2 - 1.8j])

    def test_metadata_and_headerless(self, tmp_path):
        p = write(tmp_path, "# instrument: analyzer\n# temperature=21.5\n100,1,0\n200,2,0\n")
        assert io.read_metadata(p) == {"instrument": "analyzer", "temperature": "21.5"}
        assert len(io.load_measurement(p)) == 2

    def test_decreasing_row_named(self, tmp_path):
        p = write(tmp_path, "frequency_hz,re_z,im_z\n100,1,0\n300,1,0\n200,1,0\n")
        with pytest.raises(ParseError) as exc:
            io.load_measurement(p)
        assert exc.value.line == 4 and "line 4" in str(exc.value)

    def test_duplicate_rejected(self, tmp_path):
        p = write(tmp_path, "100,1,0\n100,2,0\n200,1,0\n")
        with pytest.raises(ParseError, match="duplicate"):
            io.load_measurement(p)

    @pytest.mark.parametrize("row", ["abc,1,0", "150,nan,0", "150,1", "150,1,0,4", "150,inf,0"])
    def test_bad_rows(self, tmp_path, row):
        p = write(tmp_path, f"100,1,0\n{row}\n200,1,0\n")
        with pytest.raises(ParseError) as exc:
            io.load_measurement(p)
        assert exc.value.line == 2

    def test_band_restriction(self, tmp_path):
        p = write(tmp_path, "".join(f"{f},1,0\n" for f in range(100, 1001, 100)))
        H = io.load_measurement(p, (250, 650))
        np.testing.assert_array_equal(H.frequencies, [300, 400, 500, 600])
        with pytest.raises(DataError):
            io.load_measurement(p, (2000, 3000))
        with pytest.raises(DataError):
            io.load_measurement(p, (101, 199))

    def test_missing_and_short(self, tmp_path):
        with pytest.raises(DataError):
            io.load_measurement(tmp_path / "absent.csv")
        with pytest.raises(DataError):
            io.load_measurement(write(tmp_path, "100,1,0\n"))

    @given(
        arrays(float, 20, elements=st.floats(-1e12, 1e12, allow_subnormal=True)),
        arrays(float, 20, elements=st.floats(-1e12, 1e12, allow_subnormal=True)),
    )
    def test_roundtrip_bit_exact(self, tmp_path_factory, re, im):
        g = FrequencyGrid(np.cumsum(np.random.default_rng(0).uniform(0.1, 1e3, 20)))
        H = FrequencyResponse(g, re + 1j * im)
        p = tmp_path_factory.mktemp("rt") / "h.csv"
        io.save_measurement(p, H, {"source": "test"})
        assert io.load_measurement(p) == H

    def test_simulated_roundtrip(self, tmp_path, baseline_frf):
        io.save_measurement(tmp_path / "b.csv", baseline_frf)
        assert io.load_measurement(tmp_path / "b.csv") == baseline_frf


class TestOtherFormats:
    def test_poles(self, tmp_path):
        p = np.array([-1 + 2j, -1 - 2j, -3.5 + 0j])
        io.save_poles(tmp_path / "p.csv", p)
        np.testing.assert_array_equal(io.load_poles(tmp_path / "p.csv"), p)

    def test_stabilization(self, tmp_path):
        rows = [(6, 100.5, 0.01, 1), (8, 100.50000001, 0.0100001, 0)]
        io.save_stabilization(tmp_path / "s.csv", rows)
        assert io.load_stabilization(tmp_path / "s.csv") == rows
        assert (tmp_path / "s.csv").read_text().startswith("order,frequency_hz,damping,stable\n")

    def test_windowed_with_nan(self, tmp_path):
        g = FrequencyGrid.linspace(1, 100, 100)
        base = np.ones(100)
        base[3] = 0.0
        s = windowed_metric(FrequencyResponse(g, np.ones(100) * 2), FrequencyResponse(g, base), 30.0)
        io.save_windowed(tmp_path / "w.csv", s)
        back = io.load_windowed(tmp_path / "w.csv")
        np.testing.assert_array_equal(back.centers, s.centers)
        np.testing.assert_array_equal(back.values, s.values)
        assert [e.partial for e in back.entries] == [e.partial for e in s.entries]

    def test_json_nan_is_null(self, tmp_path):
        io.write_json(tmp_path / "x.json", {"b": float("nan"), "a": [np.float64(1.5), np.int64(2)]})
        assert io.read_json(tmp_path / "x.json") == {"a": [1.5, 2], "b": None}

    def test_bad_json(self, tmp_path):
        with pytest.raises(ParseError):
            io.read_json(write(tmp_path, "{not json", "bad.json"))

    def test_svgs_are_wellformed(self, tmp_path):
        import xml.etree.ElementTree as ET

        ET.fromstring(io.stabilization_svg([(6, 150.0, 0.01, 1), (8, 150.0, 0.01, 0)], 100, 200))
        g = FrequencyGrid.linspace(1, 100, 100)
        s = windowed_metric(FrequencyResponse(g, np.ones(100) * 2), FrequencyResponse(g, np.ones(100)), 30.0)
        ET.fromstring(io.windowed_svg(s))
