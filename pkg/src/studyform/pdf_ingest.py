"""Turn PDF bytes into page-delimited text and size up extraction requests."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ._pdf import PdfFile, extract_page_text
from .coding_form import CodingForm
from .errors import EncryptedPdf, NoTextLayer, NotAPdf

PAGE_SEPARATOR_TEMPLATE = "--- PAGE {n} ---"
TOKEN_ESTIMATE_METHOD = "chars-div-4 heuristic"


@dataclass(frozen=True)
class PageText:
    page_number: int
    text: str


@dataclass(frozen=True)
class PdfDocument:
    source_name: str
    pages: tuple[PageText, ...]
    total_chars: int
    byte_len: int
    content_hash: str

    @property
    def page_count(self) -> int:
        return len(self.pages)


@dataclass(frozen=True)
class TokenEstimate:
    estimated_tokens: int
    method: str
    document_tokens: int
    prompt_tokens: int


def extract_text(pdf_bytes: bytes, source_name: str = "") -> PdfDocument:
    """Extract one PageText per physical page, original order.

    Pages without a text layer stay in the list with empty text so page
    numbers keep lining up for source navigation. Raises NotAPdf,
    EncryptedPdf, or NoTextLayer (all pages empty: a scanned document).
    """
    if not pdf_bytes.startswith(b"%PDF-"):
        raise NotAPdf("missing %PDF- header signature")
    pdf = PdfFile(pdf_bytes)
    if pdf.is_encrypted:
        raise EncryptedPdf("document declares an /Encrypt dictionary")
    page_dicts = pdf.page_dicts()
    if not page_dicts:
        raise NotAPdf("no page tree found (damaged document?)")

    pages = tuple(
        PageText(page_number=i + 1, text=extract_page_text(pdf.page_content(p)))
        for i, p in enumerate(page_dicts)
    )
    if all(not p.text.strip() for p in pages):
        raise NoTextLayer(
            f"none of the {len(pages)} pages carries extractable text; "
            "the document is likely scanned images"
        )
    return PdfDocument(
        source_name=source_name,
        pages=pages,
        total_chars=sum(len(p.text) for p in pages),
        byte_len=len(pdf_bytes),
        content_hash=hashlib.sha256(pdf_bytes).hexdigest(),
    )


def page_delimited_text(doc: PdfDocument) -> str:
    """The text payload framing: each page introduced by a separator line."""
    blocks = []
    for page in doc.pages:
        blocks.append(PAGE_SEPARATOR_TEMPLATE.format(n=page.page_number))
        blocks.append(page.text)
    return "\n".join(blocks)


def _ceil_div4(chars: int) -> int:
    return -(-chars // 4)


def estimate_tokens(doc: PdfDocument, form: CodingForm, master_prompt: str) -> TokenEstimate:
    """Offline token estimate: ceil(chars / 4), documents and prompts split out.

    The approximation runs on extracted text even for PDF-capable providers,
    so callers should caption it as an estimate.
    """
    prompt_chars = len(master_prompt) + sum(len(v.prompt) for v in form.variables)
    document_tokens = _ceil_div4(doc.total_chars)
    prompt_tokens = _ceil_div4(prompt_chars)
    return TokenEstimate(
        estimated_tokens=document_tokens + prompt_tokens,
        method=TOKEN_ESTIMATE_METHOD,
        document_tokens=document_tokens,
        prompt_tokens=prompt_tokens,
    )
