"""Lexical extraction of comments and string literals, Japanese detection,
and byte-exact re-embedding of replacement text.

Spans are byte ranges into the UTF-8 encoding of a document, chosen so that
``span.text == raw_bytes[span.byte_start:span.byte_end].decode()`` always
holds; delimiters are never part of a span. All scanners are hand written:
only three token classes matter and byte offsets must be exact.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from .corpus import Language, SourceDocument
from .errors import SpanError

log = logging.getLogger(__name__)


class SpanKind(str, Enum):
    LINE_COMMENT = "line_comment"
    BLOCK_COMMENT = "block_comment"
    STRING_LITERAL = "string_literal"


@dataclass(frozen=True)
class Span:
    """A comment or string-literal body located by byte offsets."""

    byte_start: int
    byte_end: int
    kind: SpanKind
    text: str


@dataclass(frozen=True)
class Segment:
    """A Japanese run inside a span; offsets are bytes relative to the span start."""

    byte_start: int
    byte_end: int
    text: str


# Codepoint ranges treated as "Japanese" (inclusive). Shared CJK ideographs
# cannot distinguish Japanese from Chinese; this over-approximates on purpose.
JAPANESE_RANGES: tuple[tuple[int, int], ...] = (
    (0x3040, 0x309F),  # Hiragana
    (0x30A0, 0x30FF),  # Katakana
    (0xFF66, 0xFF9D),  # Halfwidth Katakana
    (0x4E00, 0x9FFF),  # CJK Unified Ideographs
    (0x3400, 0x4DBF),  # CJK Extension A
    (0x3001, 0x303F),  # CJK punctuation
)


def detect_japanese(text: str, ranges: tuple[tuple[int, int], ...] = JAPANESE_RANGES) -> bool:
    """True iff any character's codepoint falls in one of the Japanese ranges."""
    for ch in text:
        cp = ord(ch)
        for lo, hi in ranges:
            if lo <= cp <= hi:
                return True
    return False


def _in_ranges(ch: str, ranges: tuple[tuple[int, int], ...]) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in ranges)


def japanese_segments(
    span_text: str, ranges: tuple[tuple[int, int], ...] = JAPANESE_RANGES
) -> list[Segment]:
    """Maximal Japanese runs within a span text.

    A run covers Japanese characters plus any whitespace strictly between two
    of them; surrounding ASCII words and trailing/leading whitespace stay out.
    """
    segments: list[Segment] = []
    data = span_text.encode("utf-8")
    start = end = None
    offset = 0
    for ch in span_text:
        blen = len(ch.encode("utf-8"))
        if _in_ranges(ch, ranges):
            if start is None:
                start = offset
            end = offset + blen
        elif not ch.isspace():
            if start is not None:
                segments.append(Segment(start, end, data[start:end].decode("utf-8")))
                start = end = None
        offset += blen
    if start is not None:
        segments.append(Segment(start, end, data[start:end].decode("utf-8")))
    return segments


_SLASH = 0x2F
_STAR = 0x2A
_DQUOTE = 0x22
_SQUOTE = 0x27
_BACKSLASH = 0x5C
_NL = 0x0A
_CR = 0x0D
_AT = 0x40
_DOLLAR = 0x24
_LBRACE = 0x7B
_RBRACE = 0x7D
_SPACE = 0x20

# Longest char literal we accept before deciding a quote was stray code,
# e.g. 'A' is 8 bytes including delimiters.
_CHAR_LITERAL_CAP = 16


class _Scanner:
    """Single-pass byte scanner emitting comment and string spans."""

    def __init__(self, data: bytes, language: Language, path: str):
        self.data = data
        self.n = len(data)
        self.language = language
        self.path = path
        self.spans: list[Span] = []

    def _emit(self, kind: SpanKind, start: int, end: int) -> None:
        if start < end:
            self.spans.append(Span(start, end, kind, self.data[start:end].decode("utf-8")))

    def _warn_unterminated(self, what: str, at: int) -> None:
        log.warning("%s: unterminated %s starting at byte %d; span extends to end of file",
                    self.path, what, at)

    def scan(self) -> list[Span]:
        data, n = self.data, self.n
        allow_char = self.language in (Language.JAVA, Language.CSHARP)
        csharp = self.language is Language.CSHARP
        i = 0
        while i < n:
            c = data[i]
            if c == _SLASH and i + 1 < n and data[i + 1] == _SLASH:
                i = self._line_comment(i + 2)
            elif c == _SLASH and i + 1 < n and data[i + 1] == _STAR:
                i = self._block_comment(i + 2)
            elif c == _DQUOTE:
                i = self._string(i + 1)
            elif csharp and c == _AT and i + 1 < n and data[i + 1] == _DQUOTE:
                i = self._verbatim(i + 2, interpolated=False)
            elif csharp and c == _DOLLAR and i + 1 < n and data[i + 1] == _DQUOTE:
                i = self._interpolated(i + 2, verbatim=False)
            elif csharp and c == _AT and i + 2 < n and data[i + 1] == _DOLLAR and data[i + 2] == _DQUOTE:
                i = self._interpolated(i + 3, verbatim=True)
            elif csharp and c == _DOLLAR and i + 2 < n and data[i + 1] == _AT and data[i + 2] == _DQUOTE:
                i = self._interpolated(i + 3, verbatim=True)
            elif allow_char and c == _SQUOTE:
                i = self._char_literal(i)
            else:
                i += 1
        return self.spans

    def _line_comment(self, start: int) -> int:
        data, n = self.data, self.n
        j = start
        while j < n and data[j] != _NL:
            j += 1
        end = j
        if end > start and data[end - 1] == _CR:
            end -= 1
        if end > start and data[start] == _SPACE:
            start += 1  # one leading space is delimiter padding, not text
        self._emit(SpanKind.LINE_COMMENT, start, end)
        return j

    def _block_comment(self, start: int) -> int:
        data, n = self.data, self.n
        j = start
        while j + 1 < n:
            if data[j] == _STAR and data[j + 1] == _SLASH:
                self._emit(SpanKind.BLOCK_COMMENT, start, j)
                return j + 2
            j += 1
        self._warn_unterminated("block comment", start - 2)
        self._emit(SpanKind.BLOCK_COMMENT, start, n)
        return n

    def _string(self, start: int) -> int:
        data, n = self.data, self.n
        j = start
        while j < n:
            if data[j] == _BACKSLASH:
                j += 2
                continue
            if data[j] == _DQUOTE:
                self._emit(SpanKind.STRING_LITERAL, start, j)
                return j + 1
            j += 1
        self._warn_unterminated("string literal", start - 1)
        self._emit(SpanKind.STRING_LITERAL, start, n)
        return n

    def _verbatim(self, start: int, interpolated: bool) -> int:
        data, n = self.data, self.n
        j = start
        while j < n:
            if data[j] == _DQUOTE:
                if j + 1 < n and data[j + 1] == _DQUOTE:
                    j += 2  # doubled quote stays in the text as written
                    continue
                self._emit(SpanKind.STRING_LITERAL, start, j)
                return j + 1
            j += 1
        self._warn_unterminated("verbatim string", start - 2)
        self._emit(SpanKind.STRING_LITERAL, start, n)
        return n

    def _interpolated(self, start: int, verbatim: bool) -> int:
        """$"..." body: literal parts become separate spans, {holes} are code."""
        data, n = self.data, self.n
        part_start = start
        j = start
        while j < n:
            c = data[j]
            if c == _DQUOTE:
                if verbatim and j + 1 < n and data[j + 1] == _DQUOTE:
                    j += 2
                    continue
                self._emit(SpanKind.STRING_LITERAL, part_start, j)
                return j + 1
            if not verbatim and c == _BACKSLASH:
                j += 2
                continue
            if c == _LBRACE:
                if j + 1 < n and data[j + 1] == _LBRACE:
                    j += 2  # {{ is a literal brace
                    continue
                self._emit(SpanKind.STRING_LITERAL, part_start, j)
                j = self._skip_hole(j + 1)
                part_start = j
                continue
            if c == _RBRACE and j + 1 < n and data[j + 1] == _RBRACE:
                j += 2  # }} is a literal brace
                continue
            j += 1
        self._warn_unterminated("interpolated string", start)
        self._emit(SpanKind.STRING_LITERAL, part_start, n)
        return n

    def _skip_hole(self, j: int) -> int:
        """Skip an interpolation hole as code, brace-depth aware."""
        data, n = self.data, self.n
        depth = 1
        while j < n and depth > 0:
            c = data[j]
            if c == _LBRACE:
                depth += 1
            elif c == _RBRACE:
                depth -= 1
            elif c == _DQUOTE:
                j += 1
                while j < n:
                    if data[j] == _BACKSLASH:
                        j += 2
                        continue
                    if data[j] == _DQUOTE:
                        break
                    j += 1
            j += 1
        return j

    def _char_literal(self, i: int) -> int:
        data, n = self.data, self.n
        j = i + 1
        while j < n and data[j] != _SQUOTE and j - i <= _CHAR_LITERAL_CAP:
            j += 2 if data[j] == _BACKSLASH else 1
        if j < n and data[j] == _SQUOTE and j > i + 1:
            return j + 1  # whole literal consumed; single characters are untranslatable
        return i + 1  # stray quote, treat as code


def extract_spans(doc: SourceDocument) -> list[Span]:
    """All comment and string-literal spans of a document, sorted by offset.

    Java/C#: ``//`` and ``/* */`` comments, ``"..."`` strings with backslash
    escapes, char literals skipped; C# additionally ``@"..."`` verbatim
    strings (doubled-quote escape) and ``$"..."`` interpolated strings, whose
    interpolation holes are code and never part of a span. generic: ``//``,
    ``/* */`` and ``"..."`` only. Unterminated constructs extend to end of
    file with a logged diagnostic.
    """
    return _Scanner(doc.raw_bytes, doc.language, doc.path).scan()


def reembed(
    doc: SourceDocument,
    replacements: list[tuple[Span, Segment, str]],
) -> SourceDocument:
    """Replace targeted segments with new text, leaving every other byte as is.

    Each replacement names a (span, segment, new_text) triple; the segment's
    byte range is relative to its span. Targets must lie inside the document,
    match the segment's recorded text, and must not overlap one another.
    """
    raw = doc.raw_bytes
    n = len(raw)
    targets = []
    for span, segment, new_text in replacements:
        if not (0 <= span.byte_start < span.byte_end <= n):
            raise SpanError(f"{doc.path}: span {span.byte_start}..{span.byte_end} out of range")
        abs_start = span.byte_start + segment.byte_start
        abs_end = span.byte_start + segment.byte_end
        if not (span.byte_start <= abs_start < abs_end <= span.byte_end):
            raise SpanError(
                f"{doc.path}: segment {segment.byte_start}..{segment.byte_end} outside its span"
            )
        current = raw[abs_start:abs_end].decode("utf-8")
        if current != segment.text:
            raise SpanError(
                f"{doc.path}: segment text mismatch at {abs_start}..{abs_end} "
                f"(expected {segment.text!r}, found {current!r})"
            )
        targets.append((abs_start, abs_end, new_text))

    targets.sort(key=lambda t: (t[0], t[1]))
    previous_end = 0
    for abs_start, abs_end, _ in targets:
        if abs_start < previous_end:
            raise SpanError(f"{doc.path}: overlapping replacements at byte {abs_start}")
        previous_end = abs_end

    parts: list[bytes] = []
    cursor = 0
    for abs_start, abs_end, new_text in targets:
        parts.append(raw[cursor:abs_start])
        parts.append(new_text.encode("utf-8"))
        cursor = abs_end
    parts.append(raw[cursor:])
    return SourceDocument(
        path=doc.path,
        language=doc.language,
        raw_text=b"".join(parts).decode("utf-8"),
        doc_id=doc.doc_id,
    )
