"""Optional exporter: encode JSONL datasets into the RVHE binary format."""

from .dataset import DatasetLine, read_jsonl
from .encoders import HashEncoder, SentenceTransformerEncoder, get_encoder
from .export import ExportError, ExportJob, export_embeddings

__version__ = "0.1.0"
