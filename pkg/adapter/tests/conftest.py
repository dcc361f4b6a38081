import pytest

from adapter_helpers import synthetic_schema_and_corpus
from lm_adapter import AdapterConfig, fit_lm


@pytest.fixture(scope="session")
def tiny_artifact(tmp_path_factory):
    """Quickly trained artifact for protocol-level tests (quality irrelevant)."""
    root = tmp_path_factory.mktemp("tiny")
    _, corpus = synthetic_schema_and_corpus(root, n_lines=50)
    config = AdapterConfig(
        corpus_path=str(corpus), out_dir=str(root / "artifact"), epochs=2, seed=0
    )
    return fit_lm(config)
