"""claim-embedder: batch-encode claim corpus files into embedding TSVs."""

from .encoders import EncoderSpec, HashingEncoder, HubEncoder, make_encoder
from .errors import CorpusFormatError, EmbedderError, EncodingError, StartupError
from .export import ExportStats, export_embeddings, read_corpus_versions

__version__ = "0.1.0"
