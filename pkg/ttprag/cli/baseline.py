"""
Train-baseline command: fit the linear stand-in on labeled descriptions and
predict every procedure with it.
"""

from pathlib import Path
from typing import Optional

import typer

from ..baseline import save_model, train
from ..config import write_config_echo
from ..corpus.artifacts import DESCRIPTIONS_FILE, PROCEDURES_FILE, load_descriptions, load_procedures
from ..extraction.models import PREDICTIONS_FILE, write_predictions
from ..pipeline import predict_with_baseline
from .common import ConfigOption, OutOption, console, fail, require_file, resolve_config

app = typer.Typer()

MODEL_FILE = "baseline.model"


@app.command()
def train_baseline(
    config: Optional[Path] = ConfigOption,
    epochs: Optional[int] = typer.Option(None, "--epochs", min=1, help="Training epochs"),
    learning_rate: Optional[float] = typer.Option(None, "--learning-rate", "--lr", help="Step size"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size", min=1, help="Mini-batch size"),
    optimizer: Optional[str] = typer.Option(None, "--optimizer", help="sgd or adam"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Shuffling seed"),
    out: Optional[Path] = OutOption,
) -> None:
    """
    Train on tactic, technique and sub-technique descriptions only, then
    write baseline.model and predictions.jsonl (mode "baseline").
    """
    try:
        cfg = resolve_config(config, out=out)
        overrides = {
            k: v for k, v in {
                "epochs": epochs,
                "learning_rate": learning_rate,
                "batch_size": batch_size,
                "optimizer": optimizer,
                "seed": seed,
            }.items() if v is not None
        }
        train_config = cfg.baseline.model_validate({**cfg.baseline.model_dump(), **overrides})
        cfg = cfg.model_copy(update={"baseline": train_config})
    except (ValueError, FileNotFoundError) as e:
        fail(e, "Configuration Error")
    descriptions_path = require_file(cfg.corpus_dir / DESCRIPTIONS_FILE, "Descriptions file")
    procedures_path = require_file(cfg.corpus_dir / PROCEDURES_FILE, "Procedures file")

    try:
        descriptions = load_descriptions(descriptions_path)
        model = train(descriptions, cfg.baseline)
        save_model(model, cfg.out_dir / MODEL_FILE)
        predictions = predict_with_baseline(model, load_procedures(procedures_path))
        written = write_predictions(cfg.out_dir / PREDICTIONS_FILE, predictions)
        write_config_echo(cfg, cfg.out_dir)
    except (ValueError, OSError) as e:
        fail(e, "Training Error")

    console.print(
        f"Trained on {len(descriptions)} descriptions, vocabulary {len(model.vocabulary)}, "
        f"final loss {model.loss_history[-1]:.6f}"
    )
    console.print(f"Model written to: {cfg.out_dir / MODEL_FILE}")
    console.print(f"Predictions: {written} written to {cfg.out_dir / PREDICTIONS_FILE}")
