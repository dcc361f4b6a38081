"""Language-model generation endpoint for encoded survey-record corpora."""

from .model import CausalLM, ModelConfig
from .serving import handle_request_line, serve_stdio, serve_tcp
from .tokenizer import WordTokenizer
from .training import (
    AdapterConfig,
    CorpusUnreadable,
    TrainingDiverged,
    fit_lm,
    generate_batch,
    load_artifact,
)

__version__ = "0.1.0"
