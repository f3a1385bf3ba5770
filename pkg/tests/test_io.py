import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sclb.grid import GridFunction, make_grid
from sclb.io import RunConfig, csv_text, dump_field, dumps, fmt_float, read_field, write_json
from sclb.symbols import CaseTag

finite = st.floats(allow_nan=False, allow_infinity=False)
leaf = st.one_of(st.none(), st.booleans(), st.integers(-10**9, 10**9), finite, st.text(max_size=8))
tree = st.recursive(leaf, lambda c: st.one_of(st.lists(c, max_size=4), st.dictionaries(st.text(max_size=5), c,
                                                                                        max_size=4)), max_leaves=12)


class TestJson:
    @given(tree)
    def test_round_trip_exact(self, obj):
        assert json.loads(dumps(obj)) == obj

    @given(finite)
    def test_float_text_round_trips(self, x):
        assert float(fmt_float(x)) == x

    def test_infinity_as_string(self):
        out = json.loads(dumps({"p": math.inf, "q": -math.inf, "a": np.float64(0.5)}))
        assert out == {"p": "inf", "q": "-inf", "a": 0.5}

    def test_keys_sorted_and_enums(self):
        text = dumps({"b": 1, "a": CaseTag.TURNING_POINT})
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text)["a"] == CaseTag.TURNING_POINT.value

    def test_deterministic_bytes(self, tmp_path):
        obj = {"x": [0.1, 1 / 3, np.int64(7)], "y": {"z": 2.0**-30}}
        a = write_json(tmp_path / "a.json", obj).read_bytes()
        b = write_json(tmp_path / "b.json", dict(reversed(list(obj.items())))).read_bytes()
        assert a == b

    def test_unknown_type(self):
        with pytest.raises(TypeError):
            dumps({"s": {1, 2}})


class TestCsv:
    def test_cells(self):
        text = csv_text(["h", "v", "tag"], [[0.25, None, CaseTag.ELLIPTIC], [math.inf, 3, "a,b"]])
        lines = text.splitlines()
        assert lines[0] == "h,v,tag"
        assert lines[1] == f"0.25,,{CaseTag.ELLIPTIC.value}"
        assert lines[2] == 'inf,3,"a,b"'


class TestFieldDump:
    @pytest.mark.parametrize("n,N", [(1, 64), (2, 16)])
    def test_round_trip(self, tmp_path, n, N):
        g = make_grid(n, 2.5, N, 2**-5)
        rng = np.random.default_rng(n)
        u = GridFunction(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
        path = dump_field(tmp_path / "u.sclb", u)
        assert path.stat().st_size == 4 + 4 * 3 + 8 + 16 * N**n
        v = read_field(path, 2.5)
        assert v.grid.n == n and v.grid.N == N and v.grid.h == g.h
        assert np.array_equal(v.values, u.values)

    def test_corrupt(self, tmp_path):
        g = make_grid(1, 1.0, 8, 0.1)
        path = dump_field(tmp_path / "u.sclb", GridFunction(g, np.ones(8, dtype=complex)))
        data = path.read_bytes()
        (tmp_path / "bad.sclb").write_bytes(b"XXXX" + data[4:])
        (tmp_path / "short.sclb").write_bytes(data[:-16])
        for name in ("bad.sclb", "short.sclb"):
            with pytest.raises(ValueError):
                read_field(tmp_path / name, 1.0)


class TestRunConfig:
    def test_round_trip(self, tmp_path):
        cfg = RunConfig(command="sweep", family="airy_turning", n=2, h="2^-5..2^-9", p=["2", "10/3", "inf"],
                        tol=0.05, dump=True, L=3.5, levels=["8", "16"])
        back = RunConfig.load(cfg.save(tmp_path / "run.cfg"))
        assert back == cfg

    def test_comments_and_blank_lines(self):
        cfg = RunConfig.from_text("# sweep\n\nfamily = ground_state\np=inf\n")
        assert cfg.family == "ground_state" and cfg.p == ["inf"]

    @pytest.mark.parametrize("text", ["colour=red\n", "family\n", "dump=maybe\n", "n=two\n"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            RunConfig.from_text(text)
