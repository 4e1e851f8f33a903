"""Adapter from upstream coreference output to archlens interchange files."""

from .encode import Encoder, EmbedReport, embed_to_file, pool_characters
from .upstream import AttributeOccurrence, extract_corpus, read_occurrences

__version__ = "0.1.0"
