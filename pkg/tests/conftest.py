from __future__ import annotations

from pathlib import Path

import pytest

from kgrag.pipeline import build_store, open_store

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = REPO_ROOT / "data"
MINI_CORPUS = DATA_DIR / "mini_corpus"
MINI_QUESTIONS = DATA_DIR / "mini_corpus_questions.jsonl"


@pytest.fixture(scope="session")
def mini_corpus_dir() -> Path:
    return MINI_CORPUS


@pytest.fixture(scope="session")
def mini_questions_path() -> Path:
    return MINI_QUESTIONS


@pytest.fixture(scope="session")
def mini_store_dir(tmp_path_factory) -> Path:
    """Mini-corpus store indexed once with all defaults (hashed + rule)."""
    out = tmp_path_factory.mktemp("stores") / "mini"
    build_store(MINI_CORPUS, out)
    return out


@pytest.fixture(scope="session")
def mini_store(mini_store_dir):
    return open_store(mini_store_dir)
