"""Minimal PDF reader: object scanning, stream decoding, text extraction.

Covers the classic cross-referenced PDF layout plus Flate-compressed
object streams. Simple (single-byte) fonts are decoded as Latin-1, which
matches WinAnsi/Standard encodings for the common range; composite-font
text degrades to best effort rather than failing. Supported stream
filters: FlateDecode, ASCII85Decode, ASCIIHexDecode.
"""

from __future__ import annotations

import base64
import re
import zlib
from dataclasses import dataclass
from typing import Any, Optional

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"


@dataclass(frozen=True)
class Ref:
    num: int
    gen: int


class Name(str):
    """PDF name object (the leading slash is stripped)."""


class _Lexer:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def _skip_ws(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = self.data[self.pos]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == 0x25:  # '%' comment runs to end of line
                nl = data.find(b"\n", self.pos)
                self.pos = n if nl < 0 else nl + 1
            else:
                return

    def peek_byte(self) -> Optional[int]:
        self._skip_ws()
        if self.pos >= len(self.data):
            return None
        return self.data[self.pos]

    def read_token(self) -> Optional[bytes]:
        """Read one regular token (keyword or number)."""
        self._skip_ws()
        start = self.pos
        data = self.data
        n = len(data)
        while self.pos < n and data[self.pos] not in _WHITESPACE and data[self.pos] not in _DELIMITERS:
            self.pos += 1
        if self.pos == start:
            return None
        return data[start:self.pos]

    def read_value(self) -> Any:
        c = self.peek_byte()
        if c is None:
            raise ValueError("unexpected end of data")
        data = self.data
        if c == 0x2F:  # '/'
            return self._read_name()
        if c == 0x28:  # '('
            return self._read_literal_string()
        if c == 0x3C:  # '<' — dict or hex string
            if data[self.pos:self.pos + 2] == b"<<":
                return self._read_dict()
            return self._read_hex_string()
        if c == 0x5B:  # '['
            return self._read_array()
        token = self.read_token()
        if token is None:
            raise ValueError("cannot read value")
        if token == b"true":
            return True
        if token == b"false":
            return False
        if token == b"null":
            return None
        return self._number_or_ref(token)

    def _number_or_ref(self, token: bytes) -> Any:
        try:
            num = int(token)
        except ValueError:
            try:
                return float(token)
            except ValueError:
                return Name(token.decode("latin-1"))
        # Lookahead for "gen R" making this an indirect reference.
        save = self.pos
        gen_tok = self.read_token()
        if gen_tok is not None and gen_tok.isdigit():
            r_tok = self.read_token()
            if r_tok == b"R":
                return Ref(num, int(gen_tok))
        self.pos = save
        return num

    def _read_name(self) -> Name:
        self.pos += 1  # slash
        data, n = self.data, len(self.data)
        start = self.pos
        while self.pos < n and data[self.pos] not in _WHITESPACE and data[self.pos] not in _DELIMITERS:
            self.pos += 1
        raw = data[start:self.pos]
        # '#xx' escapes inside names
        if b"#" in raw:
            raw = re.sub(rb"#([0-9A-Fa-f]{2})", lambda m: bytes([int(m.group(1), 16)]), raw)
        return Name(raw.decode("latin-1"))

    def _read_literal_string(self) -> bytes:
        data, n = self.data, len(self.data)
        self.pos += 1  # '('
        out = bytearray()
        depth = 1
        while self.pos < n:
            c = data[self.pos]
            self.pos += 1
            if c == 0x5C:  # backslash
                if self.pos >= n:
                    break
                e = data[self.pos]
                self.pos += 1
                if e in b"nrtbf()\\":
                    out += {0x6E: b"\n", 0x72: b"\r", 0x74: b"\t", 0x62: b"\b",
                            0x66: b"\f", 0x28: b"(", 0x29: b")", 0x5C: b"\\"}[e]
                elif 0x30 <= e <= 0x37:  # octal, up to 3 digits
                    digits = chr(e)
                    while len(digits) < 3 and self.pos < n and 0x30 <= data[self.pos] <= 0x37:
                        digits += chr(data[self.pos])
                        self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                elif e in b"\r\n":  # line continuation
                    if e == 0x0D and self.pos < n and data[self.pos] == 0x0A:
                        self.pos += 1
                else:
                    out.append(e)
            elif c == 0x28:
                depth += 1
                out.append(c)
            elif c == 0x29:
                depth -= 1
                if depth == 0:
                    return bytes(out)
                out.append(c)
            else:
                out.append(c)
        return bytes(out)

    def _read_hex_string(self) -> bytes:
        self.pos += 1  # '<'
        end = self.data.find(b">", self.pos)
        if end < 0:
            end = len(self.data)
        raw = re.sub(rb"[^0-9A-Fa-f]", b"", self.data[self.pos:end])
        self.pos = end + 1
        if len(raw) % 2:
            raw += b"0"
        return bytes.fromhex(raw.decode("ascii"))

    def _read_array(self) -> list:
        self.pos += 1  # '['
        items = []
        while True:
            c = self.peek_byte()
            if c is None:
                break
            if c == 0x5D:  # ']'
                self.pos += 1
                break
            items.append(self.read_value())
        return items

    def _read_dict(self) -> dict:
        self.pos += 2  # '<<'
        out: dict[str, Any] = {}
        while True:
            c = self.peek_byte()
            if c is None:
                break
            if self.data[self.pos:self.pos + 2] == b">>":
                self.pos += 2
                break
            if c != 0x2F:
                # Malformed key; bail out of the dict rather than loop forever.
                break
            key = self._read_name()
            out[str(key)] = self.read_value()
        return out


def _decode_stream(stream_dict: dict, raw: bytes) -> bytes:
    filters = stream_dict.get("Filter")
    if filters is None:
        return raw
    if not isinstance(filters, list):
        filters = [filters]
    data = raw
    for f in filters:
        name = str(f)
        if name == "FlateDecode":
            try:
                data = zlib.decompress(data)
            except zlib.error:
                # Tolerate trailing garbage after the deflate payload.
                try:
                    data = zlib.decompressobj().decompress(data)
                except zlib.error:
                    return b""
        elif name == "ASCII85Decode":
            compact = re.sub(rb"\s", b"", data)
            if not compact.endswith(b"~>"):
                compact += b"~>"
            try:
                data = base64.a85decode(compact, adobe=True)
            except ValueError:
                return b""
        elif name == "ASCIIHexDecode":
            compact = re.sub(rb"[^0-9A-Fa-f>]", b"", data)
            compact = compact.split(b">")[0]
            if len(compact) % 2:
                compact += b"0"
            data = bytes.fromhex(compact.decode("ascii"))
        else:
            # Unsupported filter (DCT, LZW, ...): no text recoverable.
            return b""
    return data


_OBJ_RE = re.compile(rb"(\d+)\s+(\d+)\s+obj\b")


class PdfFile:
    """Parsed object table of one PDF file."""

    def __init__(self, data: bytes):
        self.data = data
        self.objects: dict[int, Any] = {}
        self.streams: dict[int, bytes] = {}
        self.trailers: list[dict] = []
        self._scan_objects()
        self._scan_trailers()
        self._expand_object_streams()

    # -- construction --

    def _scan_objects(self) -> None:
        data = self.data
        for m in _OBJ_RE.finditer(data):
            num = int(m.group(1))
            body_start = m.end()
            end = data.find(b"endobj", body_start)
            if end < 0:
                end = len(data)
            lexer = _Lexer(data, body_start)
            try:
                value = lexer.read_value()
            except ValueError:
                continue
            self.objects[num] = value
            if isinstance(value, dict):
                stream_pos = data.find(b"stream", lexer.pos, end + 7)
                if stream_pos >= 0:
                    self.streams[num] = self._cut_stream(value, stream_pos, end)

    def _cut_stream(self, stream_dict: dict, stream_pos: int, obj_end: int) -> bytes:
        data = self.data
        start = stream_pos + len(b"stream")
        if data[start:start + 2] == b"\r\n":
            start += 2
        elif data[start:start + 1] in (b"\n", b"\r"):
            start += 1
        length = stream_dict.get("Length")
        if isinstance(length, Ref):
            length = self.objects.get(length.num)
        if isinstance(length, int) and data[start + length:start + length + 20].lstrip(b"\r\n ").startswith(b"endstream"):
            raw = data[start:start + length]
        else:
            tail = data.rfind(b"endstream", start, obj_end)
            if tail < 0:
                tail = obj_end
            raw = data[start:tail].rstrip(b"\r\n")
        return raw

    def _scan_trailers(self) -> None:
        data = self.data
        for m in re.finditer(rb"trailer\b", data):
            lexer = _Lexer(data, m.end())
            try:
                value = lexer.read_value()
            except ValueError:
                continue
            if isinstance(value, dict):
                self.trailers.append(value)
        # Cross-reference streams double as trailers (PDF 1.5+).
        for num, obj in self.objects.items():
            if isinstance(obj, dict) and str(obj.get("Type", "")) == "XRef":
                self.trailers.append(obj)

    def _expand_object_streams(self) -> None:
        containers = [
            num for num, obj in self.objects.items()
            if isinstance(obj, dict) and str(obj.get("Type", "")) == "ObjStm"
        ]
        for num in containers:
            info = self.objects[num]
            payload = _decode_stream(info, self.streams.get(num, b""))
            if not payload:
                continue
            count = info.get("N")
            first = info.get("First")
            if not isinstance(count, int) or not isinstance(first, int):
                continue
            header = _Lexer(payload, 0)
            pairs = []
            try:
                for _ in range(count):
                    obj_num = header.read_value()
                    offset = header.read_value()
                    pairs.append((obj_num, offset))
            except ValueError:
                continue
            for obj_num, offset in pairs:
                if not isinstance(obj_num, int) or not isinstance(offset, int):
                    continue
                lexer = _Lexer(payload, first + offset)
                try:
                    self.objects.setdefault(obj_num, lexer.read_value())
                except ValueError:
                    continue

    # -- queries --

    def resolve(self, value: Any) -> Any:
        seen = set()
        while isinstance(value, Ref):
            if value.num in seen:
                return None
            seen.add(value.num)
            value = self.objects.get(value.num)
        return value

    @property
    def is_encrypted(self) -> bool:
        return any("Encrypt" in t for t in self.trailers)

    def catalog(self) -> Optional[dict]:
        for trailer in self.trailers:
            root = self.resolve(trailer.get("Root"))
            if isinstance(root, dict) and "Pages" in root:
                return root
        for obj in self.objects.values():
            if isinstance(obj, dict) and str(obj.get("Type", "")) == "Catalog":
                return obj
        return None

    def page_dicts(self) -> list[dict]:
        """Leaf /Page dictionaries in document order."""
        catalog = self.catalog()
        if not catalog:
            return []
        root = self.resolve(catalog.get("Pages"))
        pages: list[dict] = []
        seen: set[int] = set()

        def walk(node: Any) -> None:
            if isinstance(node, Ref):
                if node.num in seen:
                    return
                seen.add(node.num)
                node = self.resolve(node)
            if not isinstance(node, dict):
                return
            node_type = str(node.get("Type", ""))
            if node_type == "Page":
                pages.append(node)
                return
            for kid in self.resolve(node.get("Kids")) or []:
                walk(kid)

        walk(root)
        return pages

    def page_content(self, page: dict) -> bytes:
        contents = page.get("Contents")
        entries: list[Any] = []
        if isinstance(contents, Ref):
            resolved = self.resolve(contents)
            entries = resolved if isinstance(resolved, list) else [contents]
        elif isinstance(contents, list):
            entries = contents
        parts: list[bytes] = []
        for entry in entries:
            if not isinstance(entry, Ref):
                continue
            stream_dict = self.resolve(entry)
            if isinstance(stream_dict, dict):
                parts.append(_decode_stream(stream_dict, self.streams.get(entry.num, b"")))
        return b"\n".join(parts)


# -- content stream text extraction --

_TEXT_SHOW_OPS = {b"Tj", b"'", b'"'}
# Kerning gaps wider than this (thousandths of text space) read as a word break.
_TJ_SPACE_GAP = -180


def extract_page_text(content: bytes) -> str:
    """Pull shown text out of one page's content stream.

    Line-motion operators become newlines, but separators materialize only
    between shown runs so isolated positioning never pads the output.
    """
    lexer = _Lexer(content, 0)
    segments: list[str] = []
    pending: Optional[str] = None
    operands: list[Any] = []

    def emit(text: str) -> None:
        nonlocal pending
        if not text:
            return
        if segments and pending:
            segments.append(pending)
        pending = None
        segments.append(text)

    def mark(sep: str) -> None:
        nonlocal pending
        if pending != "\n":
            pending = sep

    while True:
        try:
            c = lexer.peek_byte()
        except Exception:
            break
        if c is None:
            break
        if c == 0x28 or c == 0x3C or c == 0x5B or c == 0x2F:
            if c == 0x3C and lexer.data[lexer.pos:lexer.pos + 2] == b"<<":
                try:
                    operands.append(lexer._read_dict())
                except Exception:
                    break
                continue
            try:
                operands.append(lexer.read_value())
            except Exception:
                break
            continue
        token = lexer.read_token()
        if token is None:
            lexer.pos += 1
            continue
        if token[:1].isdigit() or token[:1] in (b"-", b"+", b"."):
            try:
                operands.append(float(token))
            except ValueError:
                operands = []
            continue

        op = token
        if op == b"Tj" and operands:
            last = operands[-1]
            if isinstance(last, bytes):
                emit(last.decode("latin-1"))
        elif op == b"TJ" and operands and isinstance(operands[-1], list):
            parts: list[str] = []
            for item in operands[-1]:
                if isinstance(item, bytes):
                    parts.append(item.decode("latin-1"))
                elif isinstance(item, (int, float)) and item < _TJ_SPACE_GAP:
                    parts.append(" ")
            emit("".join(parts))
        elif op == b"'" and operands:
            mark("\n")
            last = operands[-1]
            if isinstance(last, bytes):
                emit(last.decode("latin-1"))
        elif op == b'"' and operands:
            mark("\n")
            last = operands[-1]
            if isinstance(last, bytes):
                emit(last.decode("latin-1"))
        elif op == b"T*":
            mark("\n")
        elif op in (b"Td", b"TD") and len(operands) >= 2:
            ty = operands[-1]
            if isinstance(ty, (int, float)) and ty != 0:
                mark("\n")
            elif segments:
                mark(" ")
        elif op in (b"Tm", b"ET"):
            mark("\n")
        operands = []

    return "".join(segments)
