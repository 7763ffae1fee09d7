"""Report containers: pass/fail logic and serialization."""

import json
import math

from levynet.reporting import Check, ExperimentReport


def test_check_pass_fail_boundary():
    assert Check("x", 1.0, 1.5, 0.5).passed
    assert not Check("x", 1.0, 1.5625, 0.5).passed
    assert Check("x", 5.0, 0.0, math.inf).passed


def test_report_roundtrip_and_all_passed():
    r = ExperimentReport("demo", config={"p": 3})
    r.add_estimate("mean", 1.25, 0.01)
    r.add_check("ok", 1.0, 1.0, 0.0)
    r.add_table("tbl", ["a", "b"], [[1, 2.5], [3, 4.0]])
    assert r.all_passed
    d = json.loads(r.to_json())
    assert d["name"] == "demo"
    assert d["estimates"][0]["value"] == 1.25
    assert d["checks"][0]["pass"] is True
    assert d["tables"]["tbl"]["rows"] == [[1, 2.5], [3, 4.0]]
    r.add_check("bad", 0.0, 1.0, 0.5)
    assert not r.all_passed


def test_check_to_row_status():
    assert Check("a", 1.0, 1.0, 0.0).to_row()[-1] == "pass"
    assert Check("a", 2.0, 1.0, 0.5).to_row()[-1] == "fail"
