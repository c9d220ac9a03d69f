"""Shared fixtures: corpus paths and a prebuilt mini-corpus bundle."""

from __future__ import annotations

from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"
MINI_JULIET = DATA_DIR / "mini_juliet"
LISTING1 = DATA_DIR / "listing1"


@pytest.fixture(scope="session")
def mini_corpus_dir() -> Path:
    return MINI_JULIET


@pytest.fixture(scope="session")
def listing1_dir() -> Path:
    return LISTING1


@pytest.fixture(scope="session")
def mini_bundle(tmp_path_factory):
    """Default-seed build of the mini corpus, shared across read-only tests."""
    from romeo.pipeline import PipelineConfig, build_dataset

    outdir = tmp_path_factory.mktemp("mini_build")
    config = PipelineConfig(input_root=MINI_JULIET, output_dir=outdir, seed=0)
    bundle = build_dataset(config)
    return bundle, outdir
