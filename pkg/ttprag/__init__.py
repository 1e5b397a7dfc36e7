"""
ttprag - retrieval-augmented mapping of attack procedure descriptions to
MITRE ATT&CK tactics, with a supervised baseline and evaluation tooling.
"""

__version__ = "0.1.0"
__license__ = "MIT"

from ttprag.corpus.bundle import load_snapshot
from ttprag.evaluation.metrics import sample_prf
from ttprag.extraction.extract import extract_tactics
from ttprag.retrieval.context import assemble_context


__all__ = ["load_snapshot", "assemble_context", "extract_tactics", "sample_prf"]
