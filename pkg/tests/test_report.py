"""Report emitters: json, csv, markdown."""

import pandas as pd
import pytest

from src.errors import ConfigurationError
from src.harness.report import (
    TABLE_COLUMNS,
    CoefficientSummary,
    ExcludedReplicate,
    StudyReport,
    emit_report,
    load_report_json,
    render_markdown,
    round_report,
)


def make_report(scheme="ipw-kl", d=2) -> StudyReport:
    coefs = [
        CoefficientSummary(
            index=j,
            theta0=0.6931471805599453,
            mean=0.7012345678901,
            bias=0.0080873873301547,
            sd=0.123456789012,
            mean_se=0.120000000001,
            se_ratio=0.97200000001,
            coverage=0.946,
        )
        for j in range(d)
    ]
    return StudyReport(
        name="demo",
        scheme=scheme,
        family="cox",
        n=2000,
        replications=500,
        seed=11,
        confidence_level=0.95,
        coefficients=coefs,
        n_ok=499,
        n_nonconverged=1,
        excluded=[ExcludedReplicate(index=17, seed=123456789, status="nonconverged", reason="max_iter")],
        runtime_seconds=12.3456789,
    )


class TestJson:

    def test_round_trip(self, tmp_path):
        report = make_report()
        path = emit_report(report, tmp_path / "report.json")
        assert load_report_json(path) == round_report(report)

    def test_six_significant_digits(self, tmp_path):
        back = load_report_json(emit_report(make_report(), tmp_path / "report.json"))
        assert back.coefficients[0].mean == 0.701235
        assert back.coefficients[0].theta0 == 0.693147

    def test_several_reports_as_list(self, tmp_path):
        reports = [make_report("full-data"), make_report("ipw-kl")]
        back = load_report_json(emit_report(reports, tmp_path / "reports.json"))
        assert [r.scheme for r in back] == ["full-data", "ipw-kl"]

    def test_field_order(self, tmp_path):
        path = emit_report(make_report(), tmp_path / "report.json")
        text = path.read_text()
        positions = [text.index(f'"{k}"') for k in ("name", "scheme", "family", "n", "replications")]
        assert positions == sorted(positions)


class TestTables:

    def test_csv_one_row_per_scheme_and_coefficient(self, tmp_path):
        path = emit_report([make_report("full-data"), make_report("ipw-kl")], tmp_path / "table.csv", fmt="csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == TABLE_COLUMNS
        assert len(frame) == 4
        assert frame[["scheme", "coefficient"]].drop_duplicates().shape[0] == 4

    def test_markdown_columns_in_order(self, tmp_path):
        path = emit_report(make_report(), tmp_path / "table.md", fmt="markdown-table")
        lines = path.read_text().splitlines()
        assert lines[0] == "| " + " | ".join(TABLE_COLUMNS) + " |"
        assert len(lines) == 2 + 2

    def test_markdown_blank_cells_for_missing_values(self):
        report = make_report(d=1)
        report.coefficients[0] = report.coefficients[0].model_copy(update={"sd": None, "se_ratio": None})
        row = render_markdown(report).splitlines()[2]
        assert "|  |" in row


class TestErrors:

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_report(make_report(), tmp_path / "x.xml", fmt="xml")

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("not a directory")
        with pytest.raises(ConfigurationError):
            emit_report(make_report(), blocker / "report.json")


class TestRuntime:

    def test_comparable_ignores_runtime(self):
        fast = make_report()
        slow = fast.model_copy(update={"runtime_seconds": 99.0})
        assert fast != slow
        assert fast.comparable() == slow.comparable()
        assert "runtime_seconds" not in fast.comparable()

    @pytest.mark.parametrize("fmt", ["csv", "markdown-table"])
    def test_tables_identical_across_runtimes(self, tmp_path, fmt):
        a = emit_report(make_report(), tmp_path / "a.out", fmt=fmt)
        b = emit_report(make_report().model_copy(update={"runtime_seconds": 1.0}), tmp_path / "b.out", fmt=fmt)
        assert a.read_text() == b.read_text()
