import json

import pytest

from opmethod.tables import PROFILES, SCHEMA_VERSION, RunReport, load_cases, run_case, run_tables


@pytest.fixture(scope="module")
def cases():
    return load_cases()


def test_case_inventory(cases):
    assert len(cases) == 64
    assert {c.table_id for c in cases} == {1, 2, 3, 4}
    assert sum(c.suspect for c in cases) == 2
    assert {c.L for c in cases if c.table_id == 3} == {3}


def test_plain_rows_are_converted_to_table_units(cases):
    ref = [c for c in cases if c.units == "plain" and c.lambda2 == 0.002 and c.level == 0 and c.source == "ref20"]
    assert len(ref) == 1
    assert ref[0].expected2 == pytest.approx(2 * 0.500712692243485, abs=1e-15)
    assert ref[0].printed == "0.5007126922434854"


def test_tolerance_rules(cases):
    by = {(c.table_id, c.lambda2, c.g, c.level, c.source): c for c in cases}
    assert by[(1, -2.494002, 0.499, 0, "exact")].tolerance("strict") == (1e-12, "abs")
    assert by[(3, 10.0, 0.0, 0, "ref4")].tolerance("strict") == (1e-10, "abs")
    assert by[(1, 10.0, 100.0, 0, "om")].tolerance("strict") == (1e-8, "rel")
    tol, _ = by[(1, 10.0, 100.0, 0, "om")].tolerance("default")
    assert tol == pytest.approx(1e-7)


def test_short_printed_values_get_one_ulp(cases):
    short = [c for c in cases if c.printed == "1.534570408"]
    assert short and short[0].tolerance("strict")[0] == pytest.approx(2e-9)


def test_single_case_report_round_trips_to_json(cases):
    rep = run_case(cases[6])
    assert rep.status == "pass"
    report = RunReport(profile="strict", cases=[rep])
    d = report.to_dict()
    assert d["schema_version"] == SCHEMA_VERSION
    assert "wall_time" not in d["cases"][0]
    assert json.loads(json.dumps(d)) == d
    assert "pass=1" in report.format_table()


def test_json_is_deterministic(cases):
    sub = [c for c in cases if c.table_id == 2 and c.g <= 1 and c.lambda2 <= 1][:4]
    a = run_tables(profile="strict", jobs=1, cases=sub).to_dict()
    b = run_tables(profile="strict", jobs=1, cases=sub).to_dict()
    assert a == b


def test_unknown_profile():
    assert "strict" in PROFILES
    with pytest.raises(ValueError):
        run_tables(profile="lenient", cases=[])


@pytest.mark.slow
def test_full_table_run_strict():
    report = run_tables("all", profile="strict")
    bad = [c for c in report.cases if c.status not in ("pass", "suspect")]
    assert not bad, report.format_table()
