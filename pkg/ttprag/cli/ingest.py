"""
Ingest command: parse an ATT&CK bundle and write the curated corpus.
"""

from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from ..config import write_config_echo
from ..corpus import (
    corpus_stats,
    curate_finetune_set,
    curate_procedures,
    load_snapshot,
    tactic_overlap_matrix,
    write_corpus_artifacts,
)
from ..corpus.models import CorpusStats
from ..corpus.tactics import TACTIC_ORDER
from .common import ConfigOption, OutOption, console, fail, require_file, resolve_config

app = typer.Typer()


def format_stats_table(stats: CorpusStats) -> Table:
    table = Table(title="Procedure Support by Tactic")
    table.add_column("Tactic", style="cyan")
    table.add_column("Support", style="green", justify="right")
    for tactic in TACTIC_ORDER:
        table.add_row(tactic.value, str(stats.per_tactic_support.get(tactic, 0)))
    table.add_row("[bold]Total[/bold]", f"[bold]{stats.support_total}[/bold]")
    return table


@app.command()
def ingest(
    snapshot: Optional[Path] = typer.Option(
        None,
        "--snapshot",
        "-s",
        help="STIX enterprise bundle (JSON)",
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
    ),
    version_tag: Optional[str] = typer.Option(
        None,
        "--version-tag",
        help="Snapshot version label; defaults to the file name",
    ),
    dedupe_sentences: Optional[bool] = typer.Option(
        None,
        "--dedupe-sentences/--keep-duplicates",
        help="Collapse identical procedure sentences on the same technique",
    ),
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
) -> None:
    """
    Parse a pinned ATT&CK bundle, curate the labeled descriptions and the
    procedure examples, and write them with corpus statistics.
    """
    try:
        cfg = resolve_config(
            config,
            snapshot=snapshot,
            version_tag=version_tag,
            dedupe_sentences=dedupe_sentences,
            corpus_dir=out,
        )
    except (ValueError, FileNotFoundError) as e:
        fail(e, "Configuration Error")
    if cfg.snapshot is None:
        raise typer.BadParameter("No snapshot given; pass --snapshot or set it in the config")
    require_file(cfg.snapshot, "Snapshot")

    try:
        corpus = load_snapshot(cfg.snapshot, cfg.version_tag)
        descriptions = curate_finetune_set(corpus)
        everything = curate_procedures(corpus)
        procedures = curate_procedures(corpus, dedupe_sentences=True) if cfg.dedupe_sentences else everything
        stats = corpus_stats(descriptions, procedures, n_procedures_before_filter=len(corpus.procedures))
        paths = write_corpus_artifacts(
            cfg.corpus_dir, descriptions, procedures, stats, tactic_overlap_matrix(procedures)
        )
        write_config_echo(cfg, cfg.corpus_dir)
    except (ValueError, OSError) as e:
        fail(e, "Ingest Error")

    console.print(format_stats_table(stats))
    console.print(f"Snapshot: {corpus.version_tag}")
    console.print(f"Descriptions: {stats.n_descriptions}")
    console.print(
        f"Procedures: {stats.n_procedures} kept of {stats.n_procedures_before_filter} "
        f"(support total {stats.support_total})"
    )
    if cfg.dedupe_sentences:
        console.print(f"Before sentence deduplication: {len(everything)}")
    console.print(f"Artifacts written to: {paths['procedures'].parent}")
