"""Corpus loading, normalization, sentence splitting and tokenization.

A corpus is a directory (or single file) of UTF-8 ``.txt`` files and/or
``.jsonl`` files with one ``{"id": ..., "text": ...}`` object per line.
Text is normalized (NFC, CRLF->LF, runs of blank lines collapsed) before
anything downstream sees it, so every other module can assume normalized
input.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .exceptions import InputError

logger = logging.getLogger(__name__)

# Trailing-period abbreviations that never end a sentence.
ABBREVIATIONS = frozenset(
    {"Mr.", "Mrs.", "Dr.", "e.g.", "i.e.", "etc.", "vs.", "Fig.", "Eq."}
)

_TERMINATOR_RE = re.compile(r"[.?!]+(?=\s|$)")
_PARAGRAPH_RE = re.compile(r"\n[ \t]*\n+")


@dataclass(frozen=True)
class Document:
    """One corpus unit: normalized text plus a stable id and provenance."""

    doc_id: str
    text: str
    source: str


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    index: int
    text: str
    token_count: int


def tokenize(text: str) -> list[str]:
    """Split on Unicode whitespace; no other normalization."""
    return text.split()


def normalize_text(text: str) -> str:
    """NFC, CRLF->LF, and collapse runs of more than two blank lines to two."""
    text = unicodedata.normalize("NFC", text).replace("\r\n", "\n")
    lines: list[str] = []
    blanks = 0
    for line in text.split("\n"):
        if line.strip() == "":
            blanks += 1
            if blanks > 2:
                continue
        else:
            blanks = 0
        lines.append(line)
    return "\n".join(lines)


def _iter_corpus_files(path: Path) -> list[Path]:
    if path.is_file():
        if path.suffix not in (".txt", ".jsonl"):
            raise InputError(f"unsupported corpus file type: {path} (expected .txt or .jsonl)")
        return [path]
    files = [p for p in path.rglob("*") if p.suffix in (".txt", ".jsonl") and p.is_file()]
    return sorted(files, key=str)


def _doc_id_for_txt(file: Path, root: Path) -> str:
    if file == root:
        return file.stem
    rel = file.relative_to(root)
    return rel.with_suffix("").as_posix()


def load_corpus(path: str | Path) -> list[Document]:
    """Load all documents under ``path`` in deterministic order.

    Documents are ordered by (source path lexicographic, line number).
    Empty documents are skipped with a warning. Unreadable files and
    malformed JSONL lines are hard errors.
    """
    root = Path(path)
    if not root.exists():
        raise InputError(f"corpus path does not exist: {root}")

    docs: list[Document] = []
    seen_ids: set[str] = set()

    def add(doc_id: str, raw_text: str, source: str) -> None:
        text = normalize_text(raw_text)
        if not text.strip():
            logger.warning("skipping empty document %s (%s)", doc_id, source)
            return
        if doc_id in seen_ids:
            raise InputError(f"duplicate doc_id {doc_id!r} (from {source})")
        seen_ids.add(doc_id)
        docs.append(Document(doc_id=doc_id, text=text, source=source))

    for file in _iter_corpus_files(root):
        try:
            raw = file.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise InputError(f"unreadable corpus file {file}: {exc}") from exc
        if file.suffix == ".txt":
            add(_doc_id_for_txt(file, root), raw, str(file))
        else:
            for lineno, line in enumerate(raw.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    doc_id, text = obj["id"], obj["text"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise InputError(f"malformed JSONL in {file} line {lineno}: {exc}") from exc
                add(str(doc_id), str(text), f"jsonl:{file}:{lineno}")
    return docs


def split_sentence_texts(text: str) -> list[str]:
    """Split normalized text into sentence strings.

    Boundaries: ``[.?!]`` followed by whitespace or end of text, and blank
    lines. A boundary is suppressed when the word ending at the punctuation
    is a known abbreviation. Whitespace-only fragments are dropped; text
    with no boundary comes back as a single sentence.
    """
    sentences: list[str] = []
    for paragraph in _PARAGRAPH_RE.split(text):
        start = 0
        for match in _TERMINATOR_RE.finditer(paragraph):
            end = match.end()
            word_start = max(
                paragraph.rfind(" ", 0, end), paragraph.rfind("\n", 0, end), paragraph.rfind("\t", 0, end)
            ) + 1
            if paragraph[word_start:end] in ABBREVIATIONS:
                continue
            fragment = paragraph[start:end].strip()
            if fragment:
                sentences.append(fragment)
            start = end
        tail = paragraph[start:].strip()
        if tail:
            sentences.append(tail)
    return sentences


def split_sentences(doc: Document) -> list[Sentence]:
    """Sentence objects for a normalized document, indexed from 0."""
    texts = split_sentence_texts(doc.text)
    if not texts:
        # Whitespace-only documents never reach here via load_corpus.
        return []
    return [
        Sentence(doc_id=doc.doc_id, index=i, text=t, token_count=len(tokenize(t)))
        for i, t in enumerate(texts)
    ]
