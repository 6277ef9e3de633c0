from __future__ import annotations

import json
import unicodedata

import pytest
from hypothesis import given, strategies as st

from kgrag.corpus import (
    Document,
    load_corpus,
    normalize_text,
    split_sentence_texts,
    split_sentences,
    tokenize,
)
from kgrag.exceptions import InputError


def make_doc(text: str, doc_id: str = "d") -> Document:
    return Document(doc_id=doc_id, text=normalize_text(text), source="test")


class TestLoadCorpus:
    def test_txt_files_lexicographic_order(self, tmp_path):
        (tmp_path / "b.txt").write_text("World.", encoding="utf-8")
        (tmp_path / "a.txt").write_text("Hello.", encoding="utf-8")
        docs = load_corpus(tmp_path)
        assert [d.doc_id for d in docs] == ["a", "b"]
        assert [d.text for d in docs] == ["Hello.", "World."]

    def test_jsonl_ids_and_line_order(self, tmp_path):
        lines = [
            {"id": "x1", "text": "first"},
            {"id": "x2", "text": "second"},
            {"id": "x3", "text": "third"},
        ]
        (tmp_path / "corpus.jsonl").write_text(
            "\n".join(json.dumps(obj) for obj in lines), encoding="utf-8"
        )
        docs = load_corpus(tmp_path)
        assert [d.doc_id for d in docs] == ["x1", "x2", "x3"]
        assert all("jsonl:" in d.source for d in docs)

    def test_empty_directory_is_empty_list(self, tmp_path):
        assert load_corpus(tmp_path) == []

    def test_missing_path_is_input_error(self, tmp_path):
        with pytest.raises(InputError):
            load_corpus(tmp_path / "nope")

    def test_malformed_jsonl_names_line(self, tmp_path):
        (tmp_path / "bad.jsonl").write_text(
            '{"id": "a", "text": "ok"}\nnot json at all\n', encoding="utf-8"
        )
        with pytest.raises(InputError, match="line 2"):
            load_corpus(tmp_path)

    def test_unreadable_file_names_file(self, tmp_path):
        # Permission bits don't stop root, but invalid UTF-8 is always unreadable.
        (tmp_path / "trap.txt").write_bytes(b"\xff\xfe broken")
        with pytest.raises(InputError, match="trap.txt"):
            load_corpus(tmp_path)

    def test_empty_document_skipped_with_warning(self, tmp_path, caplog):
        (tmp_path / "a.txt").write_text("Content.", encoding="utf-8")
        (tmp_path / "empty.txt").write_text("   \n\n  ", encoding="utf-8")
        with caplog.at_level("WARNING"):
            docs = load_corpus(tmp_path)
        assert [d.doc_id for d in docs] == ["a"]
        assert any("empty" in r.message for r in caplog.records)

    def test_duplicate_doc_id_is_error(self, tmp_path):
        (tmp_path / "a.jsonl").write_text(
            '{"id": "dup", "text": "one"}\n{"id": "dup", "text": "two"}\n', encoding="utf-8"
        )
        with pytest.raises(InputError, match="dup"):
            load_corpus(tmp_path)

    def test_deterministic_across_invocations(self, tmp_path):
        (tmp_path / "a.txt").write_text("Alpha beta.", encoding="utf-8")
        (tmp_path / "b.jsonl").write_text('{"id": "j", "text": "Gamma."}', encoding="utf-8")
        assert load_corpus(tmp_path) == load_corpus(tmp_path)

    def test_normalization_nfc_crlf_blank_lines(self, tmp_path):
        decomposed = "café"  # e + combining acute
        raw = f"{decomposed} line one.\r\n\n\n\n\nNext paragraph."
        (tmp_path / "a.txt").write_text(raw, encoding="utf-8")
        (doc,) = load_corpus(tmp_path)
        assert unicodedata.is_normalized("NFC", doc.text)
        assert "\r" not in doc.text
        # four blank lines collapse to two
        assert "\n\n\n\n" not in doc.text
        assert "café line one.\n\n\nNext paragraph." == doc.text


class TestSplitSentences:
    def test_two_sentences(self):
        doc = make_doc("Pasta is boiled. Pizza is baked.")
        assert [s.text for s in split_sentences(doc)] == ["Pasta is boiled.", "Pizza is baked."]

    def test_abbreviation_suppresses_split(self):
        doc = make_doc("Dr. Rossi cooks. He is famous.")
        assert [s.text for s in split_sentences(doc)] == ["Dr. Rossi cooks.", "He is famous."]

    def test_single_sentence_fallback(self):
        doc = make_doc("One sentence only")
        sentences = split_sentences(doc)
        assert len(sentences) == 1
        assert sentences[0].text == "One sentence only"
        assert sentences[0].token_count == 3

    def test_blank_line_is_boundary(self):
        doc = make_doc("First paragraph without period\n\nSecond paragraph")
        assert [s.text for s in split_sentences(doc)] == [
            "First paragraph without period",
            "Second paragraph",
        ]

    def test_indices_sequential(self):
        doc = make_doc("A one. B two. C three.")
        assert [s.index for s in split_sentences(doc)] == [0, 1, 2]

    def test_mid_token_punctuation_does_not_split(self):
        doc = make_doc("Version 1.5 shipped. Done.")
        assert [s.text for s in split_sentences(doc)] == ["Version 1.5 shipped.", "Done."]

    @pytest.mark.parametrize("abbr", ["e.g.", "i.e.", "etc.", "vs.", "Fig.", "Eq.", "Mr.", "Mrs."])
    def test_all_listed_abbreviations(self, abbr):
        doc = make_doc(f"We cook, {abbr} with care and salt. Next sentence here.")
        assert len(split_sentences(doc)) == 2


class TestTokenize:
    def test_basic(self):
        assert tokenize("chunks of 100 tokens") == ["chunks", "of", "100", "tokens"]

    def test_empty(self):
        assert tokenize("") == []

    def test_whitespace_collapse(self):
        assert tokenize("a  b\nc") == ["a", "b", "c"]


normalized_docs = (
    st.text(min_size=1, max_size=300)
    .map(normalize_text)
    .filter(lambda t: t.strip())
    .map(lambda t: Document(doc_id="h", text=t, source="hyp"))
)


class TestProperties:
    @given(normalized_docs)
    def test_token_counts_sum(self, doc):
        sentences = split_sentences(doc)
        assert sum(s.token_count for s in sentences) == len(tokenize(doc.text))

    @given(normalized_docs)
    def test_non_whitespace_characters_preserved_in_order(self, doc):
        joined = " ".join(s.text for s in split_sentences(doc))
        strip_ws = lambda t: "".join(t.split())
        assert strip_ws(joined) == strip_ws(doc.text)

    @given(normalized_docs)
    def test_no_zero_token_sentence(self, doc):
        assert all(s.token_count >= 1 for s in split_sentences(doc))

    @given(normalized_docs)
    def test_split_deterministic(self, doc):
        assert split_sentences(doc) == split_sentences(doc)

    @given(st.text(max_size=300))
    def test_normalize_idempotent(self, text):
        once = normalize_text(text)
        assert normalize_text(once) == once

    @given(st.text(max_size=200))
    def test_split_texts_never_whitespace_only(self, text):
        for fragment in split_sentence_texts(normalize_text(text)):
            assert fragment.strip() == fragment and fragment
