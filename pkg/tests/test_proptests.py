import pytest

from proptests import PROPERTIES, format_report, run_all, run_property, write_report_csv


@pytest.mark.parametrize("name", sorted(PROPERTIES))
def test_property_holds(name):
    report = run_property(name, seed=0)
    assert report.passed, report.detail
    assert report.instances > 0


def test_default_suite_passes_every_property():
    reports = run_all(seed=0)
    assert [r.name for r in reports if not r.passed] == []
    assert format_report(reports).splitlines()[-1] == "10/10 properties passed"


def test_grid_dominance_is_checked_per_instance():
    report = run_property("wmmse_grid_dominance", seed=0)
    assert "0 instances below 0.98" in report.detail
    assert report.max_deviation <= 0.02


def test_reports_are_reproducible():
    assert run_property("wmmse_grid_dominance", seed=5) == run_property("wmmse_grid_dominance", seed=5)


def test_parameter_report_names_discrepancy():
    assert "published 2258, computed 2186" in run_property("parameter_counts").detail


def test_report_formatting(tmp_path):
    reports = [run_property(name) for name in ("overhead_formula_table", "parameter_counts")]
    text = format_report(reports)
    assert text.splitlines()[-1] == "2/2 properties passed"
    assert "[PASS] overhead_formula_table" in text
    path = write_report_csv(tmp_path / "report.csv", reports)
    assert path.read_text().splitlines()[0] == "property,instances,max_deviation,passed,detail"


def test_every_property_is_registered():
    assert len(PROPERTIES) == 10
