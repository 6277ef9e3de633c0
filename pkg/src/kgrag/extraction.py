"""Entity and relationship extraction: rule-based and remote LLM paths.

The rule extractor is deterministic: capitalized token runs become entity
mentions, and consecutive mention pairs in a sentence become triples whose
relation is the (short) token gap between them. The remote extractor sends
a fixed prompt to a chat endpoint and parses strict-JSON triples, with one
repair retry. Both expose the same interface so the indexing pipeline and
query-time NER do not care which one they got.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from .corpus import split_sentence_texts, tokenize
from .exceptions import ProviderError
from .lexical import strip_edge_punctuation
from .remote import ChatClient

logger = logging.getLogger(__name__)

# Single-token candidates in this list are dropped, and leading stopwords are
# trimmed from longer candidates ("The Amalfi Coast" -> "Amalfi Coast").
ENTITY_STOPWORDS = frozenset(
    {"The", "A", "An", "It", "He", "She", "They", "This", "That",
     "In", "On", "At", "But", "And", "Or"}
)
# Question-initial capitals would otherwise pollute graph lookups.
INTERROGATIVES = frozenset({"What", "Who", "Where", "When", "Why", "How", "Which"})
QUERY_STOPWORDS = ENTITY_STOPWORDS | INTERROGATIVES

MAX_RELATION_GAP = 4
FALLBACK_RELATION = "related_to"

EXTRACTION_SYSTEM_PROMPT = "You extract knowledge triples."
EXTRACTION_USER_TEMPLATE = (
    "Extract (subject, relation, object) triples from the text. "
    "Return a JSON array of objects with keys subject, relation, object. "
    "Text:\n{text}"
)
EXTRACTION_REPAIR_SUFFIX = "Return only valid JSON."

_NON_SNAKE_RE = re.compile(r"[^a-z0-9]+")


@dataclass(frozen=True)
class Triple:
    subject: str
    relation: str
    object: str
    provenance: str = ""


@dataclass(frozen=True)
class EntityMention:
    surface: str
    normalized: str


def normalize_entity(surface: str) -> str:
    """Lowercase, collapse whitespace, strip trailing punctuation. Idempotent."""
    text = " ".join(surface.lower().split())
    while text and not text[-1].isalnum():
        text = text[:-1]
    return text


def snake_case(relation: str) -> str:
    return _NON_SNAKE_RE.sub("_", relation.lower()).strip("_")


def _mention_spans(tokens: list[str], stopwords: frozenset[str]) -> list[tuple[int, int]]:
    """Token spans [start, end) of capitalized runs, leading stopwords trimmed."""
    spans: list[tuple[int, int]] = []
    i = 0
    n = len(tokens)
    while i < n:
        if tokens[i][:1].isupper():
            start = i
            while i < n and tokens[i][:1].isupper():
                i += 1
            while start < i and strip_edge_punctuation(tokens[start]) in stopwords:
                start += 1
            if start < i:
                spans.append((start, i))
        else:
            i += 1
    return spans


def extract_entities_rule(
    sentence: str, stopwords: frozenset[str] = ENTITY_STOPWORDS
) -> list[EntityMention]:
    """Entity mentions in order of first appearance, deduplicated by normalized form."""
    tokens = tokenize(sentence)
    mentions: list[EntityMention] = []
    seen: set[str] = set()
    for start, end in _mention_spans(tokens, stopwords):
        surface = " ".join(tokens[start:end])
        normalized = normalize_entity(surface)
        if normalized and normalized not in seen:
            seen.add(normalized)
            mentions.append(EntityMention(surface=surface, normalized=normalized))
    return mentions


def extract_triples_rule(sentence: str, provenance: str = "") -> list[Triple]:
    """Triples from consecutive mention pairs within one sentence.

    A gap of 1..MAX_RELATION_GAP tokens between the pair becomes the relation
    (lowercased, punctuation-stripped, underscore-joined); adjacent or distant
    pairs fall back to "related_to".
    """
    tokens = tokenize(sentence)
    spans = _mention_spans(tokens, ENTITY_STOPWORDS)
    triples: list[Triple] = []
    for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
        gap = tokens[e1:s2]
        if 1 <= len(gap) <= MAX_RELATION_GAP:
            words = [strip_edge_punctuation(t.lower()) for t in gap]
            relation = "_".join(w for w in words if w) or FALLBACK_RELATION
        else:
            relation = FALLBACK_RELATION
        subject = normalize_entity(" ".join(tokens[s1:e1]))
        obj = normalize_entity(" ".join(tokens[s2:e2]))
        if subject and obj:
            triples.append(Triple(subject=subject, relation=relation, object=obj, provenance=provenance))
    return triples


class RuleExtractor:
    """Deterministic, pure extractor; reentrant."""

    kind = "rule"

    def entities(self, text: str, stopwords: frozenset[str] | None = None) -> list[EntityMention]:
        words = stopwords if stopwords is not None else ENTITY_STOPWORDS
        mentions: list[EntityMention] = []
        seen: set[str] = set()
        for sentence in split_sentence_texts(text):
            for m in extract_entities_rule(sentence, words):
                if m.normalized not in seen:
                    seen.add(m.normalized)
                    mentions.append(m)
        return mentions

    def triples(self, text: str, provenance: str = "") -> list[Triple]:
        out: list[Triple] = []
        for sentence in split_sentence_texts(text):
            out.extend(extract_triples_rule(sentence, provenance))
        return out


def extract_triples_remote(text: str, client: ChatClient, provenance: str = "") -> list[Triple]:
    """Ask the chat endpoint for strict-JSON triples, with one repair retry."""
    user = EXTRACTION_USER_TEMPLATE.format(text=text)
    messages = [
        {"role": "system", "content": EXTRACTION_SYSTEM_PROMPT},
        {"role": "user", "content": user},
    ]
    raw = client.chat(messages)
    items = _parse_triple_json(raw)
    if items is None:
        repair = [
            {"role": "system", "content": EXTRACTION_SYSTEM_PROMPT},
            {"role": "user", "content": f"{user}\n{EXTRACTION_REPAIR_SUFFIX}"},
        ]
        raw = client.chat(repair)
        items = _parse_triple_json(raw)
    if items is None:
        raise ProviderError(f"triple extraction returned non-JSON after retry: {raw[:200]!r}")

    triples: list[Triple] = []
    skipped = 0
    for item in items:
        if not isinstance(item, dict):
            skipped += 1
            continue
        subject = str(item.get("subject", "")).strip()
        relation = snake_case(str(item.get("relation", "")))
        obj = str(item.get("object", "")).strip()
        if subject and relation and obj:
            triples.append(Triple(subject=subject, relation=relation, object=obj, provenance=provenance))
        else:
            skipped += 1
    if skipped:
        logger.warning("skipped %d invalid triple item(s) from extraction response", skipped)
    return triples


def _parse_triple_json(raw: str) -> list | None:
    try:
        data = json.loads(raw.strip())
    except json.JSONDecodeError:
        return None
    return data if isinstance(data, list) else None


class RemoteExtractor:
    """LLM-backed extractor; the entity pass reuses the triple prompt."""

    kind = "remote"

    def __init__(self, client: ChatClient):
        self.client = client

    def entities(self, text: str, stopwords: frozenset[str] | None = None) -> list[EntityMention]:
        mentions: list[EntityMention] = []
        seen: set[str] = set()
        drop = {normalize_entity(w) for w in (stopwords or frozenset())}
        for triple in self.triples(text):
            for surface in (triple.subject, triple.object):
                normalized = normalize_entity(surface)
                if normalized and normalized not in seen and normalized not in drop:
                    seen.add(normalized)
                    mentions.append(EntityMention(surface=surface, normalized=normalized))
        return mentions

    def triples(self, text: str, provenance: str = "") -> list[Triple]:
        return extract_triples_remote(text, self.client, provenance)


def query_ner(question: str, extractor) -> list[EntityMention]:
    """Entity mentions of a question, deduplicated by normalized form."""
    return extractor.entities(question, stopwords=QUERY_STOPWORDS)
