"""Shared test utilities: stub embedders, synthetic documents, fake HTTP."""

from __future__ import annotations

import math
import random

import numpy as np

from kgrag.corpus import Sentence, tokenize


class SeqEmbedder:
    """Returns prescribed vectors positionally; for driving the chunker."""

    def __init__(self, vectors):
        self.vectors = [np.asarray(v, dtype=np.float64) for v in vectors]
        self.dimension = len(self.vectors[0])

    def embed_batch(self, texts):
        assert len(texts) == len(self.vectors), "one vector per window expected"
        return list(self.vectors)

    def embed(self, text):
        return self.vectors[0]


def make_sentences(texts: list[str], doc_id: str = "doc") -> list[Sentence]:
    return [
        Sentence(doc_id=doc_id, index=i, text=t, token_count=len(tokenize(t)))
        for i, t in enumerate(texts)
    ]


def vectors_with_consecutive_similarities(sims: list[float]) -> list[np.ndarray]:
    """Unit 2-D vectors whose consecutive cosines equal ``sims`` exactly-ish."""
    angles = [0.0]
    for s in sims:
        angles.append(angles[-1] + math.acos(s))
    return [np.array([math.cos(a), math.sin(a)]) for a in angles]


def two_topic_sentences(rng: random.Random, per_topic: int = 11) -> tuple[list[Sentence], int]:
    """A document that switches topic exactly once, with disjoint vocabularies.

    Each topic has its own random vocabulary (distinct letter ranges keep the
    two disjoint); every sentence repeats three topic anchor words so
    within-topic windows stay similar while cross-topic windows are near
    orthogonal under the hashing embedder.
    """

    def vocab(letters: str) -> list[str]:
        return ["".join(rng.choice(letters) for _ in range(7)) for _ in range(12)]

    def sentences(words: list[str]) -> list[str]:
        anchors = words[:3]
        return [
            " ".join(anchors + rng.choices(words, k=5)) for _ in range(per_topic)
        ]

    first = sentences(vocab("abcdefghijklm"))
    second = sentences(vocab("nopqrstuvwxyz"))
    return make_sentences(first + second), len(first)


class FakeResponse:
    def __init__(self, status_code: int, payload=None, text: str = ""):
        self.status_code = status_code
        self._payload = payload
        self.text = text if text else repr(payload)

    def json(self):
        if self._payload is None:
            raise ValueError("no JSON body")
        return self._payload


class FakePost:
    """Swap in for requests.post: pops scripted responses, records calls."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls: list[dict] = []

    def __call__(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers, "timeout": timeout})
        if not self.responses:
            raise AssertionError("FakePost ran out of scripted responses")
        response = self.responses.pop(0)
        if isinstance(response, Exception):
            raise response
        return response


def embedding_payload(vectors) -> dict:
    return {"data": [{"index": i, "embedding": list(map(float, v))} for i, v in enumerate(vectors)]}


def chat_payload(content: str) -> dict:
    return {"choices": [{"message": {"content": content}}]}
