"""Shared lexical machinery: the content-token set behind overlap scoring.

Both the retriever's confirmation boost and the lexical support judge score
token overlap over the same definition of "content token": lowercased, edge
punctuation/symbols stripped, stopwords and pure-punctuation tokens dropped.
"""

from __future__ import annotations

STOPWORDS = frozenset(
    """
    a an and are as at be but by for from has have in is it its of on or
    that the this to was were will with
    """.split()
)


def strip_edge_punctuation(token: str) -> str:
    """Trim non-alphanumeric characters from both ends of a token.

    Interior punctuation survives, so "capital_of" and "don't" stay whole
    while "-[capital_of]->" loses its arrow decoration.
    """
    start, end = 0, len(token)
    while start < end and not token[start].isalnum():
        start += 1
    while end > start and not token[end - 1].isalnum():
        end -= 1
    return token[start:end]


def content_tokens(text: str) -> set[str]:
    """Lowercased token set with stopwords and pure punctuation removed."""
    out: set[str] = set()
    for raw in text.split():
        tok = strip_edge_punctuation(raw.lower())
        if tok and tok not in STOPWORDS:
            out.add(tok)
    return out
