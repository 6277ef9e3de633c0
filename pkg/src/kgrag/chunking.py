"""Two-stage chunking: semantic boundary detection, then token windows.

Stage one groups each sentence with its neighbors (window size k), embeds
the windows, and closes a chunk wherever the cosine distance between
sequential windows strictly exceeds the nearest-rank percentile threshold
of all distances. Stage two bounds chunk length with a fixed-stride token
window (default 100 tokens, 16 overlap).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import Sentence, tokenize
from .embedding import Vector, cosine_similarity
from .exceptions import ProviderError, StoreCorruptError


@dataclass
class ChunkerConfig:
    window_k: int = 1
    percentile: float = 95.0
    chunk_size: int = 100
    overlap: int = 16

    def __post_init__(self) -> None:
        if self.window_k < 0:
            raise ValueError("window_k must be >= 0")
        if not 0.0 < self.percentile <= 100.0:
            raise ValueError("percentile must be in (0, 100]")
        if self.chunk_size < 2:
            raise ValueError("chunk_size must be >= 2")
        if not 0 <= self.overlap < self.chunk_size:
            raise ValueError("overlap must satisfy 0 <= overlap < chunk_size")


@dataclass(frozen=True)
class SemanticChunk:
    """A contiguous run of sentences forming one coherent unit."""

    chunk_id: str
    doc_id: str
    sentence_span: tuple[int, int]  # inclusive
    text: str


@dataclass(frozen=True)
class Chunk:
    """A token-bounded slice of a semantic chunk; the unit that gets indexed."""

    chunk_id: str
    parent_semantic_chunk: str
    doc_id: str
    token_span: tuple[int, int]  # half-open
    text: str


def build_windows(sentences: list[Sentence], k: int) -> list[str]:
    """Window i = sentences max(0, i-k) .. min(n-1, i+k), space-joined."""
    if not sentences:
        raise ValueError("build_windows requires at least one sentence")
    n = len(sentences)
    return [
        " ".join(s.text for s in sentences[max(0, i - k) : min(n - 1, i + k) + 1])
        for i in range(n)
    ]


def sequential_distances(embeddings: list[Vector]) -> list[float]:
    """Cosine distances between consecutive embeddings; empty if fewer than 2."""
    if len(embeddings) < 2:
        return []
    return [
        1.0 - cosine_similarity(embeddings[i], embeddings[i + 1])
        for i in range(len(embeddings) - 1)
    ]


def percentile_threshold(distances: list[float], p: float) -> float:
    """Nearest-rank percentile: sorted value at index ceil(p/100 * n) - 1."""
    if not distances:
        raise ValueError("no distances")
    if not 0.0 < p <= 100.0:
        raise ValueError("percentile must be in (0, 100]")
    ordered = sorted(distances)
    rank = math.ceil(p / 100.0 * len(ordered))
    return ordered[rank - 1]


def semantic_split(sentences: list[Sentence], embedder, config: ChunkerConfig) -> list[SemanticChunk]:
    """Split a document's sentences into semantically coherent chunks.

    The greedy scan closes the running chunk after sentence i whenever the
    window distance d_i strictly exceeds the percentile threshold, so the
    number of chunks is always 1 + |{i : d_i > T}|.
    """
    if not sentences:
        raise ValueError("semantic_split requires at least one sentence")
    doc_id = sentences[0].doc_id

    boundaries: list[int] = []
    if len(sentences) > 1:
        windows = build_windows(sentences, config.window_k)
        try:
            embeddings = embedder.embed_batch(windows)
        except ProviderError as exc:
            # The provider message already pinpoints the failing window batch.
            raise ProviderError(f"window embedding failed for doc {doc_id!r}: {exc}") from exc
        distances = sequential_distances(embeddings)
        if distances:
            threshold = percentile_threshold(distances, config.percentile)
            boundaries = [i for i, d in enumerate(distances) if d > threshold]

    chunks: list[SemanticChunk] = []
    start = 0
    for seq, boundary in enumerate([*boundaries, len(sentences) - 1]):
        span = (start, boundary)
        chunks.append(
            SemanticChunk(
                chunk_id=f"{doc_id}#s{seq}",
                doc_id=doc_id,
                sentence_span=span,
                text=" ".join(s.text for s in sentences[start : boundary + 1]),
            )
        )
        start = boundary + 1
    return chunks


def token_window_split(semantic_chunk: SemanticChunk, chunk_size: int, overlap: int) -> list[Chunk]:
    """Fixed-stride token windows over one semantic chunk.

    Chunk j covers tokens [j*stride, j*stride + chunk_size) clipped to the
    end; emission stops as soon as the final token is covered.
    """
    if not 0 <= overlap < chunk_size:
        raise ValueError("overlap must satisfy 0 <= overlap < chunk_size")
    tokens = tokenize(semantic_chunk.text)
    total = len(tokens)
    if total == 0:
        return []

    stride = chunk_size - overlap
    chunks: list[Chunk] = []
    start = 0
    j = 0
    while True:
        end = min(start + chunk_size, total)
        chunks.append(
            Chunk(
                chunk_id=f"{semantic_chunk.chunk_id}#t{j}",
                parent_semantic_chunk=semantic_chunk.chunk_id,
                doc_id=semantic_chunk.doc_id,
                token_span=(start, end),
                text=" ".join(tokens[start:end]),
            )
        )
        if end >= total:
            return chunks
        start += stride
        j += 1


def chunk_to_json(chunk: Chunk) -> str:
    return json.dumps(
        {
            "chunk_id": chunk.chunk_id,
            "doc_id": chunk.doc_id,
            "parent": chunk.parent_semantic_chunk,
            "span": list(chunk.token_span),
            "text": chunk.text,
        },
        ensure_ascii=False,
    )


def chunk_from_json(line: str) -> Chunk:
    try:
        obj = json.loads(line)
        return Chunk(
            chunk_id=obj["chunk_id"],
            parent_semantic_chunk=obj["parent"],
            doc_id=obj["doc_id"],
            token_span=(obj["span"][0], obj["span"][1]),
            text=obj["text"],
        )
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        raise StoreCorruptError(f"bad chunk record: {exc}") from exc


def write_chunks_jsonl(chunks: list[Chunk], path: Path) -> None:
    """One chunk per line, in pipeline order (doc, semantic chunk, span start)."""
    with open(path, "w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(chunk_to_json(chunk) + "\n")


def read_chunks_jsonl(path: Path) -> list[Chunk]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise StoreCorruptError(f"cannot read chunk file {path}: {exc}") from exc
    return [chunk_from_json(line) for line in lines if line.strip()]
