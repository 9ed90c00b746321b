"""Shared fixtures: scripted PDF construction and small forms.

Fixture PDFs come from reportlab so the extraction path under test never
feeds itself.
"""

from __future__ import annotations

import io

import pytest
from reportlab.lib import pdfencrypt
from reportlab.pdfgen import canvas


def build_pdf(pages: list[list[str]]) -> bytes:
    """One page per entry; each entry is a list of text lines (may be empty)."""
    buf = io.BytesIO()
    c = canvas.Canvas(buf)
    for lines in pages:
        y = 750
        for line in lines:
            c.drawString(72, y, line)
            y -= 14
        c.showPage()
    c.save()
    return buf.getvalue()


def build_scanned_pdf(page_count: int = 1) -> bytes:
    """Pages with drawings but no text layer."""
    buf = io.BytesIO()
    c = canvas.Canvas(buf)
    for _ in range(page_count):
        c.rect(100, 100, 300, 300, fill=1)
        c.showPage()
    c.save()
    return buf.getvalue()


def build_encrypted_pdf() -> bytes:
    buf = io.BytesIO()
    c = canvas.Canvas(buf, encrypt=pdfencrypt.StandardEncryption("owner-pw"))
    c.drawString(100, 700, "locked away")
    c.showPage()
    c.save()
    return buf.getvalue()


def form_bytes(prompts: list[str], rows: list[list[str]] | None = None,
               labels: list[str] | None = None) -> bytes:
    """Build coding-form CSV bytes, with a label column when labels given."""
    import csv

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    if labels is not None:
        writer.writerow(["study_label"] + prompts)
        for label, row in zip(labels, rows or []):
            writer.writerow([label] + row)
    else:
        writer.writerow(prompts)
        for row in rows or []:
            writer.writerow(row)
    return buf.getvalue().encode("utf-8")


@pytest.fixture
def three_page_pdf() -> bytes:
    return build_pdf(
        [["First page line one", "second line"], [], ["Third page text"]]
    )


@pytest.fixture
def hello_pdf() -> bytes:
    return build_pdf([["Hello world"]])
