import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from impatience import Economy, decompose, reconstruct, solve_equilibrium, synthesize_economy, verify_equilibrium
from impatience import formats
from impatience.errors import FormatError

from conftest import di_factors, quasi_hyperbolic


def roundtrip_sequence(values):
    buf = io.StringIO()
    formats.write_sequence(buf, values)
    return buf.getvalue(), formats.read_sequence(io.StringIO(buf.getvalue()))


class TestCsv:
    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=40))
    def test_sequence_round_trip_is_exact(self, values):
        text, back = roundtrip_sequence(values)
        np.testing.assert_array_equal(back, values)
        assert text.startswith("t,value\n")

    def test_table_and_profile(self):
        text = "t,member_1,member_2\n0,1,1\n1,0.5,0.8\n2,0.25,0.64\n"
        names, table = formats.read_table(io.StringIO(text))
        assert names == ["member_1", "member_2"]
        assert table.shape == (3, 2)
        np.testing.assert_array_equal(formats.read_profile(io.StringIO(text))[1], [1, 0.8, 0.64])

    def test_allocation_round_trip(self):
        shares = np.array([[1.0, 0.25, 0.0], [0.0, 0.75, 1.0]])
        buf = io.StringIO()
        formats.write_allocation(buf, shares)
        assert buf.getvalue().splitlines()[0] == "t,agent_1,agent_2"
        np.testing.assert_array_equal(formats.read_allocation(io.StringIO(buf.getvalue())), shares)

    def test_blank_lines_ignored(self):
        assert formats.read_sequence(io.StringIO("t,value\n0,1\n\n1,0.5\n")).tolist() == [1.0, 0.5]

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("", "empty"),
            ("t,value\n", "no data"),
            ("x,value\n0,1\n", "header"),
            ("t,value\n0,1\n2,0.5\n", "gap"),
            ("t,value\n0,1\n0,0.5\n", "duplicate"),
            ("t,value\n0,abc\n", "non-numeric"),
            ("t,value\n0,inf\n", "finite"),
            ("t,value\n0,1,2\n", "fields"),
            ("t,value\nzero,1\n", "integer"),
            ("t,price\n0,1\n", "t,value"),
        ],
    )
    def test_malformed(self, text, fragment):
        with pytest.raises(FormatError, match=fragment):
            formats.read_sequence(io.StringIO(text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError, match="cannot read"):
            formats.read_sequence(tmp_path / "absent.csv")


class TestJson:
    def test_economy_round_trip(self):
        e = Economy.from_arrays([0.5, 0.9], [1.0, 2.5], 3)
        doc = json.loads(formats.dumps(formats.economy_to_dict(e)))
        back = formats.economy_from_dict(doc)
        assert back.horizon == 3
        np.testing.assert_array_equal(back.deltas, e.deltas)
        np.testing.assert_array_equal(back.wealths, e.wealths)

    @pytest.mark.parametrize(
        "doc",
        [{}, {"horizon": 3}, {"horizon": 3.5, "agents": []}, {"horizon": 3, "agents": [{"delta": 0.5}]}],
    )
    def test_malformed_economy(self, doc):
        with pytest.raises(FormatError):
            formats.economy_from_dict(doc)

    def test_invalid_json(self):
        with pytest.raises(FormatError, match="invalid JSON"):
            formats.read_economy(io.StringIO("{not json"))

    def test_result_and_report(self):
        e = Economy.from_arrays([0.5, 0.9], [1.0, 1.0], 3)
        result = solve_equilibrium(e)
        doc = formats.result_to_dict(result)
        assert doc["method"] == "envelope"
        np.testing.assert_array_equal(doc["prices"], result.prices)
        report = formats.report_to_dict(verify_equilibrium(e, result.prices, result.allocation))
        assert report["verdict"] == "pass" and report["violations"] == []

    @given(di_factors())
    def test_decomposition_round_trip(self, f):
        d = decompose(f)
        text = formats.dumps(formats.decomposition_to_dict(d))
        back = formats.decomposition_from_dict(json.loads(text))
        assert back.components == d.components
        np.testing.assert_array_equal(reconstruct(back, f.horizon).values, reconstruct(d, f.horizon).values)
        np.testing.assert_allclose(back.g, d.g, rtol=1e-13)

    def test_eta_is_exact_fraction(self):
        doc = formats.decomposition_to_dict(decompose(quasi_hyperbolic(horizon=5)))
        assert [c["eta"] for c in doc["components"]] == ["1/2", "1/2"]

    def test_decomposition_shape_check(self):
        doc = formats.decomposition_to_dict(decompose(quasi_hyperbolic(horizon=5)))
        doc["h"] = doc["h"][:-1]
        with pytest.raises(FormatError):
            formats.decomposition_from_dict(doc)

    def test_synthesized_documents_serialize(self):
        e, result = synthesize_economy(quasi_hyperbolic())
        json.loads(formats.dumps({"economy": formats.economy_to_dict(e), "result": formats.result_to_dict(result)}))
