"""
Index command: embed every curated procedure and persist the index.
"""

from pathlib import Path
from typing import Optional

import typer

from ..corpus.artifacts import PROCEDURES_FILE, load_procedures
from ..embedding import build_index, load_index, make_provider, save_index
from .common import ConfigOption, console, fail, require_file, resolve_config

app = typer.Typer()


@app.command()
def index(
    config: Optional[Path] = ConfigOption,
    output: Optional[Path] = typer.Option(
        None,
        "--index",
        "-i",
        help="Index file to write",
        file_okay=True,
        dir_okay=False,
    ),
    verify: bool = typer.Option(
        True,
        "--verify/--no-verify",
        help="Reload the written file and check its checksum",
    ),
) -> None:
    """
    Build the exact cosine index over all curated procedures.
    """
    try:
        cfg = resolve_config(config, index_path=output)
    except (ValueError, FileNotFoundError) as e:
        fail(e, "Configuration Error")
    procedures_path = require_file(cfg.corpus_dir / PROCEDURES_FILE, "Procedures file")

    try:
        procedures = load_procedures(procedures_path)
        provider = make_provider(
            cfg.embedding.provider,
            dimension=cfg.embedding.dimension,
            model=cfg.embedding.model,
            api_key_env=cfg.llm.api_key_env,
        )
        built = build_index(((p.procedure_id, p.text) for p in procedures), provider)
        save_index(built, cfg.index_path)
        if verify:
            load_index(cfg.index_path)
    except (ValueError, OSError) as e:
        fail(e, "Index Error")

    console.print(f"Indexed {len(built)} procedures ({provider.describe()})")
    console.print(f"Index written to: {cfg.index_path}")
