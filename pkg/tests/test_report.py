import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_levy import ConfigError
from robust_levy.report import (RULES, Check, ExperimentReport, Table, canonical_json, digest,
                                merge_reports, render)


def _report(values, tol=0.5, rule="max_at_most"):
    t = Table(("n", "err"))
    for i, v in enumerate(values):
        t.add(i + 1, v)
    return ExperimentReport("demo", {"b": 2, "a": [1, 2]}, {"errors": t}, {"tol": tol},
                            [Check("small", rule, "errors", ("err",), "tol")])


def test_rules_on_hand_cases():
    assert RULES["max_at_most"]([[0.1, 0.2]], 0.2)
    assert not RULES["max_at_most"]([[0.1, 0.3]], 0.2)
    assert RULES["all_zero"]([[0.0, 0.0]], None)
    assert not RULES["all_zero"]([[0.0, 1e-300]], None)
    assert RULES["all_true"]([[True, True]], None)
    assert not RULES["all_true"]([[True, 1]], None)
    assert RULES["in_range"]([[3.0, 4.5]], [3, 5])
    assert RULES["decreasing"]([[3, 2, 1]], None) and not RULES["decreasing"]([[3, 3, 1]], None)
    assert RULES["eventually_decreasing"]([[3, 5, 4, 4, 2]], 3)
    assert not RULES["eventually_decreasing"]([[3, 5, 4, 4, 2]], 2)
    # the final entry must also be the smallest seen
    assert not RULES["eventually_decreasing"]([[1, 5, 4, 4, 2]], 3)
    assert RULES["last_three_within"]([[9, 0.1, 0.2, 0.1]], 0.2)
    assert RULES["plateau"]([[9, 3.67, 3.674, 3.636]], 0.05)
    assert not RULES["plateau"]([[1.0, 2.0, 3.0]], 0.05)
    assert RULES["le_column"]([[1, 2], [1, 3]], None)
    assert RULES["max_at_most"]([["inf"]], "inf")


def test_verdicts_recomputed_from_tables():
    rep = _report([0.1, 0.4])
    assert rep.verdicts == {"small": True} and rep.passed
    bad = _report([0.1, 0.6])
    assert bad.failures() == ["small"]


def test_json_round_trip_and_recheck():
    rep = _report([0.1, 0.4])
    back = ExperimentReport.from_dict(json.loads(rep.to_json()))
    assert back.to_json() == rep.to_json()
    assert back.recheck() == back.verdicts
    # a tampered verdict is exposed by recomputation
    d = json.loads(rep.to_json())
    d["tables"]["errors"]["rows"][1][1] = 0.9
    assert ExperimentReport.from_dict(d).recheck() == {"small": False}


def test_timing_excluded_by_default():
    rep = _report([0.1])
    rep.wall_clock = 12.5
    assert "wall_clock" not in json.loads(rep.to_json())
    assert json.loads(rep.to_json(timing=True))["wall_clock"] == 12.5


def test_digest_ignores_key_order():
    assert digest({"a": 1, "b": [1.0, 2]}) == digest({"b": [1.0, 2], "a": 1})
    assert canonical_json({"x": (1, 2)}) == '{"x":[1,2]}'


def test_csv_layout():
    rep = _report([0.1, 1 / 3])
    text = rep.table_csv("errors")
    lines = text.split("\n")
    assert lines[0] == "# experiment=demo"
    assert lines[1] == f"# config_digest={rep.config_digest}"
    assert lines[2] == "# table=errors"
    assert lines[3] == "n,err"
    assert lines[5] == "2,0.33333333333333331"
    assert "\r" not in text and text.endswith("\n")


def test_render_forms():
    assert render(True) == "true" and render(False) == "false"
    assert render(3) == "3" and render(math.inf) == "inf" and render(math.nan) == "nan"
    assert render(0.1) == "0.10000000000000001"


def test_unknown_rule_raises():
    with pytest.raises(ConfigError):
        _report([0.1], rule="nope")


def test_table_row_width_checked():
    with pytest.raises(ValueError):
        Table(("a", "b")).add(1)


def test_merge_prefixes_names():
    a, b = _report([0.1]), _report([0.9])
    b.experiment = "other"
    m = merge_reports("all", [a, b])
    assert set(m.tables) == {"demo.errors", "other.errors"}
    assert m.verdicts == {"demo.small": True, "other.small": False}


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1,
                max_size=8))
def test_render_round_trips_floats(values):
    for v in values:
        assert float(render(v)) == v
