from __future__ import annotations

import json

import pytest

from studyform.cli import main
from studyform.coding_form import load_form

from .conftest import build_pdf, build_scanned_pdf, form_bytes

SIX_PROMPTS = [f"Question {i}" for i in range(1, 7)]


def write_form(tmp_path, name="form.csv", prompts=SIX_PROMPTS):
    path = tmp_path / name
    path.write_bytes(form_bytes(prompts))
    return path


class TestBatch:
    def test_three_pdfs_all_populated(self, tmp_path, capsys):
        form_path = write_form(tmp_path)
        pdf_dir = tmp_path / "pdfs"
        pdf_dir.mkdir()
        for name in ("a.pdf", "b.pdf", "c.pdf"):
            (pdf_dir / name).write_bytes(build_pdf([[f"text of {name}"]]))
        out = tmp_path / "results.csv"

        code = main(
            [
                "batch",
                "--form", str(form_path),
                "--pdf-dir", str(pdf_dir),
                "--provider", "mock",
                "--model", "mock-model",
                "--out", str(out),
            ]
        )
        assert code == 0
        results = load_form(out.read_bytes())
        assert [r.study_label for r in results.rows] == ["a.pdf", "b.pdf", "c.pdf"]
        for row in results.rows:
            assert all(c.value for c in row.cells)
        manifest = json.loads((tmp_path / "results.csv.failures.json").read_text())
        assert manifest == []

    def test_failures_become_empty_rows_and_manifest(self, tmp_path):
        form_path = write_form(tmp_path)
        pdf_dir = tmp_path / "pdfs"
        pdf_dir.mkdir()
        (pdf_dir / "good1.pdf").write_bytes(build_pdf([["fine text"]]))
        (pdf_dir / "bad.pdf").write_bytes(build_pdf([["body MOCK-FAIL-REFUSE"]]))
        (pdf_dir / "scanned.pdf").write_bytes(build_scanned_pdf())
        out = tmp_path / "results.csv"

        code = main(
            [
                "batch",
                "--form", str(form_path),
                "--pdf-dir", str(pdf_dir),
                "--provider", "mock",
                "--model", "m",
                "--out", str(out),
            ]
        )
        assert code == 0
        results = load_form(out.read_bytes())
        by_label = {r.study_label: r for r in results.rows}
        assert len(results.rows) == 3
        assert all(c.value for c in by_label["good1.pdf"].cells)
        assert all(not c.value for c in by_label["bad.pdf"].cells)
        assert all(not c.value for c in by_label["scanned.pdf"].cells)
        manifest = json.loads((tmp_path / "results.csv.failures.json").read_text())
        codes = {e["study_label"]: e["error_code"] for e in manifest}
        assert codes == {"bad.pdf": "model_refused", "scanned.pdf": "no_text_layer"}

    def test_empty_directory_is_usage_error(self, tmp_path):
        form_path = write_form(tmp_path)
        pdf_dir = tmp_path / "empty"
        pdf_dir.mkdir()
        code = main(
            [
                "batch",
                "--form", str(form_path),
                "--pdf-dir", str(pdf_dir),
                "--provider", "mock",
                "--model", "m",
                "--out", str(tmp_path / "o.csv"),
            ]
        )
        assert code != 0

    def test_all_failures_nonzero_exit(self, tmp_path):
        form_path = write_form(tmp_path)
        pdf_dir = tmp_path / "pdfs"
        pdf_dir.mkdir()
        (pdf_dir / "only.pdf").write_bytes(build_pdf([["x MOCK-FAIL-REFUSE"]]))
        code = main(
            [
                "batch",
                "--form", str(form_path),
                "--pdf-dir", str(pdf_dir),
                "--provider", "mock",
                "--model", "m",
                "--out", str(tmp_path / "o.csv"),
            ]
        )
        assert code == 1

    def test_rows_in_lexicographic_order(self, tmp_path):
        form_path = write_form(tmp_path)
        pdf_dir = tmp_path / "pdfs"
        pdf_dir.mkdir()
        for name in ("zeta.pdf", "alpha.pdf", "mid.pdf"):
            (pdf_dir / name).write_bytes(build_pdf([[f"text {name}"]]))
        out = tmp_path / "r.csv"
        main(
            [
                "batch",
                "--form", str(form_path),
                "--pdf-dir", str(pdf_dir),
                "--provider", "mock",
                "--model", "m",
                "--out", str(out),
            ]
        )
        results = load_form(out.read_bytes())
        assert [r.study_label for r in results.rows] == [
            "alpha.pdf", "mid.pdf", "zeta.pdf",
        ]


class TestAgree:
    def test_report_written_and_rendered(self, tmp_path, capsys):
        human = tmp_path / "human.csv"
        llm = tmp_path / "llm.csv"
        human.write_bytes(
            form_bytes(["A", "B"], [["x", "y"], ["x", "y"]], labels=["s1", "s2"])
        )
        llm.write_bytes(
            form_bytes(["A", "B"], [["x", "y"], ["x", "z"]], labels=["s1", "s2"])
        )
        report_path = tmp_path / "report.json"
        code = main(
            ["agree", "--human", str(human), "--llm", str(llm), "--report", str(report_path)]
        )
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["exact_only"]["overall"]["pct"] == 75.0
        assert "exact_plus_accurate" in report
        out = capsys.readouterr().out
        assert "75.00" in out

    def test_identical_forms_full_agreement(self, tmp_path):
        content = form_bytes(["A", "B"], [["x", "y1"], ["z", "y2"]], labels=["s1", "s2"])
        human = tmp_path / "h.csv"
        llm = tmp_path / "l.csv"
        human.write_bytes(content)
        llm.write_bytes(content)
        report_path = tmp_path / "r.json"
        assert main(
            ["agree", "--human", str(human), "--llm", str(llm), "--report", str(report_path)]
        ) == 0
        report = json.loads(report_path.read_text())
        assert report["exact_only"]["overall"]["pct"] == 100.0
        assert report["exact_only"]["pooled_kappa"]["value"] == 1.0

    def test_llm_missing_all_rows_zero(self, tmp_path):
        human = tmp_path / "h.csv"
        llm = tmp_path / "l.csv"
        human.write_bytes(form_bytes(["A"], [["x"], ["y"]], labels=["s1", "s2"]))
        llm.write_bytes(form_bytes(["A"]))
        report_path = tmp_path / "r.json"
        assert main(
            ["agree", "--human", str(human), "--llm", str(llm), "--report", str(report_path)]
        ) == 0
        report = json.loads(report_path.read_text())
        assert report["exact_only"]["overall"]["pct"] == 0.0

    def test_schema_mismatch_nonzero_exit(self, tmp_path, capsys):
        human = tmp_path / "h.csv"
        llm = tmp_path / "l.csv"
        human.write_bytes(form_bytes(["A", "B"]))
        llm.write_bytes(form_bytes(["A"]))
        code = main(
            ["agree", "--human", str(human), "--llm", str(llm), "--report", str(tmp_path / "r.json")]
        )
        assert code == 1
        assert "schema_mismatch" in capsys.readouterr().err

    def test_kinds_file_enables_split(self, tmp_path):
        human = tmp_path / "h.csv"
        llm = tmp_path / "l.csv"
        human.write_bytes(form_bytes(["A", "B"], [["x", "y"]], labels=["s1"]))
        llm.write_bytes(form_bytes(["A", "B"], [["x", "n"]], labels=["s1"]))
        kinds = tmp_path / "kinds.json"
        kinds.write_text(
            json.dumps(
                {
                    "columns": [
                        {"index": 0, "kind": "explicit"},
                        {"index": 1, "kind": "derived"},
                    ]
                }
            )
        )
        report_path = tmp_path / "r.json"
        assert main(
            [
                "agree",
                "--human", str(human),
                "--llm", str(llm),
                "--kinds", str(kinds),
                "--report", str(report_path),
            ]
        ) == 0
        report = json.loads(report_path.read_text())
        assert report["exact_only"]["per_kind"]["explicit"]["agreement"]["pct"] == 100.0
        assert report["exact_only"]["per_kind"]["derived"]["agreement"]["pct"] == 0.0


class TestTokens:
    def test_breakdown_printed(self, tmp_path, capsys):
        form_path = write_form(tmp_path, prompts=["P" * 40])
        pdf_path = tmp_path / "doc.pdf"
        pdf_path.write_bytes(build_pdf([["word " * 50]]))
        code = main(["tokens", "--form", str(form_path), "--pdf", str(pdf_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "estimated_tokens:" in out
        assert "document_tokens:" in out
        assert "chars-div-4 heuristic" in out

    def test_scanned_pdf_nonzero_exit(self, tmp_path, capsys):
        form_path = write_form(tmp_path)
        pdf_path = tmp_path / "scan.pdf"
        pdf_path.write_bytes(build_scanned_pdf())
        code = main(["tokens", "--form", str(form_path), "--pdf", str(pdf_path)])
        assert code == 1
        assert "no_text_layer" in capsys.readouterr().err


class TestExampleForm:
    def test_written_form_loads(self, tmp_path):
        out = tmp_path / "example.csv"
        assert main(["example-form", "--out", str(out)]) == 0
        form = load_form(out.read_bytes())
        assert len(form.variables) == 24
