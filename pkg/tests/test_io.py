import json

import numpy as np
import pytest

from spinorlab.clifford import build_clifford
from spinorlab.dirac import DiracOperator
from spinorlab.fields import GridSpec, ScalarField, SpinorField
from spinorlab.green import green_function
from spinorlab.io import (
    atomic_write_text,
    csv_text,
    read_csv,
    read_spf1,
    spf1_header,
    write_csv,
    write_json,
    write_spf1,
)


def test_spf1_spinor_roundtrip(tmp_path, rng):
    g = GridSpec(3, (4, 3, 2), (1.0, 2.5, 3.0), ("a", "p", "a"))
    vals = rng.standard_normal(g.sizes + (2,)) + 1j * rng.standard_normal(g.sizes + (2,))
    f = SpinorField(g, build_clifford(3), vals)
    back = read_spf1(write_spf1(tmp_path / "f.spf", f))
    assert back.grid == g
    np.testing.assert_array_equal(back.values, vals)


def test_spf1_scalar_roundtrip(tmp_path, rng):
    g = GridSpec.cube(2, 5, 1.5)
    h = ScalarField(g, rng.random(g.sizes))
    back = read_spf1(write_spf1(tmp_path / "h.spf", h))
    assert isinstance(back, ScalarField)
    np.testing.assert_array_equal(back.values, h.values)


def test_spf1_layout(tmp_path):
    g = GridSpec.cube(1, 2, 1.0)
    f = SpinorField(g, build_clifford(1), np.array([[1 + 2j], [3 - 4j]]))
    raw = write_spf1(tmp_path / "f.spf", f).read_bytes()
    head, body = raw.split(b"\n", 1)
    assert head.decode() == "SPF1 n=1 dims=2 lens=1.0 spin=a fiber=1"
    np.testing.assert_array_equal(np.frombuffer(body, "<f8"), [1, 2, 3, -4])
    assert spf1_header(g, 1).endswith("\n")


@pytest.mark.parametrize("payload", [b"XXXX n=1\n", b"SPF1 n=1 dims=2\n", b"SPF1 n=1 dims\n"])
def test_spf1_rejects_bad_headers(tmp_path, payload):
    p = tmp_path / "bad.spf"
    p.write_bytes(payload)
    with pytest.raises(ValueError):
        read_spf1(p)


def test_spf1_rejects_truncated_body(tmp_path):
    g = GridSpec.cube(2, 4)
    p = write_spf1(tmp_path / "f.spf", SpinorField.zeros(g, build_clifford(2)))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError):
        read_spf1(p)


def test_csv_is_deterministic(tmp_path):
    rows = [{"n": 3, "x": 0.1, "ok": True, "z": 1 + 2j}, {"n": 4, "x": 1e-17, "ok": False, "z": -1j}]
    a = csv_text(rows)
    assert a == csv_text(rows)
    assert a.splitlines()[0] == "n,x,ok,z_re,z_im"
    assert a.splitlines()[1] == "3,0.1,1,1.0,2.0"
    back = read_csv(write_csv(tmp_path / "t.csv", rows))
    assert float(back[1]["x"]) == 1e-17
    assert back[0]["ok"] == "1"


def test_csv_floats_roundtrip_exactly(tmp_path, rng):
    xs = rng.standard_normal(20)
    back = read_csv(write_csv(tmp_path / "t.csv", [{"x": x} for x in xs]))
    assert [float(r["x"]) for r in back] == list(xs)


def test_empty_csv_needs_columns():
    with pytest.raises(ValueError):
        csv_text([])
    assert csv_text([], ["a", "b"]) == "a,b\n"


def test_json_handles_numpy(tmp_path):
    p = write_json(tmp_path / "x.json", {"b": np.float64(1.5), "a": np.arange(2), "c": 1j, "d": tmp_path})
    data = json.loads(p.read_text())
    assert data == {"a": [0, 1], "b": 1.5, "c": [0.0, 1.0], "d": str(tmp_path)}
    assert p.read_text().index('"a"') < p.read_text().index('"b"')
    with pytest.raises(TypeError):
        write_json(tmp_path / "y.json", {"s": {1, 2}})


def test_atomic_write_leaves_no_temporaries(tmp_path):
    atomic_write_text(tmp_path / "sub" / "a.txt", "one")
    atomic_write_text(tmp_path / "sub" / "a.txt", "two")
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["a.txt"]
    assert (tmp_path / "sub" / "a.txt").read_text() == "two"


def test_green_dump(tmp_path):
    D = DiracOperator(GridSpec.cube(2, 8), build_clifford(2))
    exp = green_function(D, (0.0, 0.0))
    paths = exp.save(tmp_path / "g")
    assert len(paths) == 5
    np.testing.assert_array_equal(read_spf1(tmp_path / "g_G1.spf").values, exp.G[1])
    side = json.loads((tmp_path / "g.json").read_text())
    assert side["p"] == [0.0, 0.0] and len(side["alpha"]) == 4
