"""
Predict command: query a chat backend for every curated procedure.
"""

from pathlib import Path
from typing import Optional

import typer
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn

from ..config import validate_run_config, write_config_echo
from ..corpus.artifacts import PROCEDURES_FILE, load_procedures
from ..extraction.models import PREDICTIONS_FILE, write_predictions
from ..llm.backends import make_backend
from ..llm.journal import Journal
from ..llm.prompts import PromptVariant
from ..pipeline import build_retrieval_deps, run_predictions
from ..retrieval.models import RetrievalMode
from ..retrieval.pages import prefetch_pages
from ..utils.monitoring import reset_stage_metrics
from .common import ConfigOption, OutOption, console, fail, require_file, resolve_config, stage_metrics_table

app = typer.Typer()

JOURNAL_FILE = "journal.jsonl"


def default_variant(mode: RetrievalMode) -> PromptVariant:
    if mode == RetrievalMode.PROMPT_ONLY:
        return PromptVariant.SPECIFIC_NO_CONTEXT
    return PromptVariant.SPECIFIC_WITH_CONTEXT


@app.command()
def predict(
    config: Optional[Path] = ConfigOption,
    mode: Optional[RetrievalMode] = typer.Option(None, "--mode", "-m", help="Retrieval mode"),
    variant: Optional[PromptVariant] = typer.Option(
        None, "--variant", help="Prompt variant; follows the mode when omitted"
    ),
    backend: Optional[str] = typer.Option(None, "--backend", "-b", help="openai, mock or replay"),
    budget: Optional[int] = typer.Option(None, "--budget", min=1, help="Concurrent requests"),
    replay: Optional[Path] = typer.Option(
        None,
        "--replay",
        help="Replay responses from this journal; nothing is sent over the network",
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
    ),
    live_fetch: Optional[bool] = typer.Option(
        None, "--live-fetch/--offline", help="Fetch uncached technique pages over HTTP"
    ),
    limit: Optional[int] = typer.Option(
        None, "--limit", min=1, help="Only the first N procedures by id"
    ),
    out: Optional[Path] = OutOption,
) -> None:
    """
    Assemble context, prompt the backend and extract tactics for every
    procedure. Re-running into the same output directory resumes from its
    journal.
    """
    try:
        if mode is not None and variant is None:
            variant = default_variant(mode)
        cfg = validate_run_config(resolve_config(
            config,
            mode=mode,
            variant=variant,
            backend=backend,
            budget=budget,
            replay=replay,
            live_fetch=live_fetch,
            out=out,
        ))
    except (ValueError, FileNotFoundError) as e:
        fail(e, "Configuration Error")
    procedures_path = require_file(cfg.corpus_dir / PROCEDURES_FILE, "Procedures file")

    reset_stage_metrics()
    try:
        corpus = load_procedures(procedures_path)
        procedures = sorted(corpus, key=lambda p: p.procedure_id)
        if limit:
            procedures = procedures[:limit]
        deps = build_retrieval_deps(cfg, corpus)

        if cfg.llm.backend == "replay":
            journal = None
            replay_journal = Journal(cfg.llm.replay_journal)
        else:
            journal = Journal(cfg.out_dir / JOURNAL_FILE)
            replay_journal = None
        chat = make_backend(
            cfg.llm.backend,
            model_id=cfg.llm.model_id,
            budget=cfg.llm.budget,
            max_retries=cfg.llm.max_retries,
            api_key_env=cfg.llm.api_key_env,
            replay_journal=replay_journal,
        )

        if cfg.mode == RetrievalMode.EXACT_URL and cfg.retrieval.live_fetch:
            failed = prefetch_pages(
                (p.url for p in procedures),
                deps.cache,
                allow_network=True,
                workers=cfg.retrieval.fetch_workers,
                timeout=cfg.retrieval.fetch_timeout,
            )
            if failed:
                console.print(f"[yellow]Warning: {len(failed)} pages could not be fetched[/yellow]")

        with Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=console,
            transient=True,
        ) as progress:
            task = progress.add_task(f"{cfg.mode.value} / {cfg.variant.value}", total=len(procedures))
            run = run_predictions(
                procedures, cfg, deps, chat, journal,
                on_done=lambda _: progress.advance(task),
            )

        written = write_predictions(cfg.out_dir / PREDICTIONS_FILE, run.predictions)
        write_config_echo(cfg, cfg.out_dir)
    except (ValueError, OSError) as e:
        fail(e, "Predict Error")

    console.print(stage_metrics_table())
    console.print(f"Predictions: {written} written to {cfg.out_dir / PREDICTIONS_FILE}")
    if run.resumed:
        console.print(f"Resumed from journal: {run.resumed}")
    if cfg.mode != RetrievalMode.PROMPT_ONLY:
        console.print(f"Own page among retrieved URLs: {run.matched} of {written}")
        if run.context_unavailable:
            console.print(f"[yellow]Context unavailable: {run.context_unavailable}[/yellow]")
    if run.failures:
        console.print(Panel(
            f"[yellow]{len(run.failures)} procedures failed; re-run into the same --out to retry them[/yellow]",
            title="Warning",
            border_style="yellow",
        ))
        raise typer.Exit(1)
