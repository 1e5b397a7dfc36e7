"""
Response-to-tactics extraction and the prediction record.
"""

from .extract import extract_tactics, render_tactic_list
from .models import BASELINE_MODE, PREDICTIONS_FILE, Prediction, load_predictions, write_predictions

__all__ = [
    "BASELINE_MODE",
    "PREDICTIONS_FILE",
    "Prediction",
    "extract_tactics",
    "load_predictions",
    "render_tactic_list",
    "write_predictions",
]
