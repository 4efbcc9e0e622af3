########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Command-line surface: gen-data, train, eval, bias, gradcheck, ablate, report."""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import click
from rich.console import Console
from rich.table import Table

from unimoco.config import RunConfig, load_run_config
from unimoco.corpus import ModalityCombo, combo_tallies, gen_corpus, read_manifest, write_manifest
from unimoco.evaluation import (
    STUDIES,
    bias_experiment,
    evaluate,
    read_bias_report,
    read_score_report,
    read_summaries,
    render_bias_report,
    render_score_report,
    render_summaries,
    run_study,
    write_bias_report,
    write_score_report,
    write_summaries,
)
from unimoco.exceptions import TrainingDivergedError, UniMoCoError
from unimoco.model import build_model, check_compatible, load_checkpoint, save_checkpoint
from unimoco.numerics.gradcheck import OP_CASES, GradCheckReport, run_suite
from unimoco.training import TraceEntry, apply_low_rank_adapters, read_loss_trace, train, write_loss_trace
from unimoco.training.checks import PIPELINE_CASES


logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

TRAIN_MANIFEST = 'train.jsonl'
EVAL_MANIFEST = 'eval.jsonl'
CHECKPOINT = 'checkpoint.npz'
PARTIAL_CHECKPOINT = 'checkpoint.partial.npz'
LOSS_TRACE = 'loss_trace.txt'
SCORE_REPORT = 'score_report.jsonl'
BIAS_REPORT = 'bias_report.jsonl'
DEFAULT_OUT = Path('runs/default')

console = Console()


def reports_errors(fn: Callable) -> Callable:
    """Turn package errors into a one-line message and exit code 1."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except UniMoCoError as err:
            raise click.ClickException(str(err)) from err
    return wrapper


def config_options(required: bool) -> Callable[[Callable], Callable]:
    def decorate(fn: Callable) -> Callable:
        fn = click.option('--deterministic/--no-deterministic', default=None,
                          help='Single-threaded evaluation (default from run.deterministic).')(fn)
        fn = click.option('--seed', type=int, default=None, help='Override the top-level seed.')(fn)
        fn = click.option('--out', 'out_dir', type=click.Path(file_okay=False, path_type=Path),
                          default=None, help='Output directory (default from run.out_dir).')(fn)
        fn = click.option('--config', 'config_path', required=required,
                          type=click.Path(exists=True, dir_okay=False, path_type=Path),
                          help='Run configuration file.')(fn)
        return fn
    return decorate


run_options = config_options(required=True)


def _load(config_path: Path, seed: Optional[int], deterministic: Optional[bool],
          out_dir: Optional[Path]) -> Tuple[RunConfig, Path]:
    cfg = load_run_config(config_path, seed_override=seed)
    if deterministic is not None:
        cfg = cfg.with_switches(deterministic=deterministic)
    out = out_dir or Path(cfg.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _tally_table(title: str, tallies) -> Table:
    table = Table(title=title)
    table.add_column('combo')
    table.add_column('pairs', justify='right')
    for combo in ModalityCombo:
        table.add_row(combo.label, str(tallies[combo]))
    return table


@click.group()
@click.option('--verbose', is_flag=True, help='Log at DEBUG level.')
def cli(verbose: bool) -> None:
    """Multi-modal embeddings with modality completion on a synthetic benchmark."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT,
                        stream=sys.stderr)


##########################################################
# Data, training, evaluation
##########################################################
@cli.command('gen-data')
@run_options
@reports_errors
def gen_data(config_path: Path, out_dir: Optional[Path], seed: Optional[int],
             deterministic: Optional[bool]) -> None:
    """Write the training and evaluation manifests."""
    cfg, out = _load(config_path, seed, deterministic, out_dir)
    for name, spec in ((TRAIN_MANIFEST, cfg.corpus), (EVAL_MANIFEST, cfg.eval_spec())):
        records = list(gen_corpus(spec))
        write_manifest(records, out / name)
        console.print(_tally_table(f'{name} ({len(records)} pairs)', combo_tallies(records)))


@cli.command('train')
@run_options
@reports_errors
def train_cmd(config_path: Path, out_dir: Optional[Path], seed: Optional[int],
              deterministic: Optional[bool]) -> None:
    """Train on the generated manifest; writes a checkpoint and the loss trace."""
    cfg, out = _load(config_path, seed, deterministic, out_dir)
    manifest = out / TRAIN_MANIFEST
    if not manifest.exists():
        raise click.ClickException(f'{manifest} not found; run gen-data first')
    records = read_manifest(manifest)
    model_cfg = cfg.model_for_run()
    check_compatible(model_cfg, (item for r in records for item in (r.query, r.positive_target)))

    model = build_model(model_cfg)
    if cfg.adapter.enabled:
        apply_low_rank_adapters(model, cfg.adapter)
    trace: List[TraceEntry] = []
    try:
        train(records, model, cfg.train, cfg.loss_for_run(), on_step=trace.append)
    except TrainingDivergedError as err:
        save_checkpoint(model, out / PARTIAL_CHECKPOINT, params=err.last_good)
        write_loss_trace(trace, out / LOSS_TRACE)
        raise
    save_checkpoint(model, out / CHECKPOINT)
    write_loss_trace(trace, out / LOSS_TRACE)
    if trace:
        click.echo(f'final loss {trace[-1].loss:.6f} after {len(trace)} steps')


@cli.command('eval')
@config_options(required=False)
@click.option('--checkpoint', 'checkpoint_path', type=click.Path(dir_okay=False, path_type=Path),
              default=None, help='Checkpoint (default <out>/checkpoint.npz).')
@click.option('--manifest', 'manifest_path', type=click.Path(dir_okay=False, path_type=Path),
              default=None, help='Evaluation manifest (default <out>/eval.jsonl).')
@click.option('--workers', type=click.IntRange(min=1), default=None,
              help='Embedding threads (default from eval.workers, else 1).')
@reports_errors
def eval_cmd(config_path: Optional[Path], out_dir: Optional[Path], seed: Optional[int],
             deterministic: Optional[bool], checkpoint_path: Optional[Path],
             manifest_path: Optional[Path], workers: Optional[int]) -> None:
    """Score a checkpoint on an evaluation manifest.

    Without --config the run directory defaults to runs/default. With it, a
    missing evaluation manifest is regenerated from the configured corpus.
    """
    cfg: Optional[RunConfig] = None
    if config_path is not None:
        cfg, out = _load(config_path, seed, deterministic, out_dir)
    elif seed is not None:
        raise click.UsageError('--seed needs --config')
    else:
        out = out_dir or DEFAULT_OUT
    if deterministic is None and cfg is not None:
        deterministic = cfg.run.deterministic
    if deterministic:
        workers = 1
    elif workers is None:
        workers = cfg.eval.workers if cfg is not None else 1

    model = load_checkpoint(checkpoint_path or out / CHECKPOINT)
    manifest = manifest_path or out / EVAL_MANIFEST
    if cfg is not None and not manifest.exists():
        logger.info('%s not found; generating the evaluation corpus', manifest)
        records = list(gen_corpus(cfg.eval_spec()))
    else:
        records = read_manifest(manifest)
    check_compatible(model.cfg, (item for r in records for item in (r.query, r.positive_target)))
    report = evaluate(records, model, workers=workers)
    out.mkdir(parents=True, exist_ok=True)
    write_score_report(report, out / SCORE_REPORT)
    render_score_report(report, console)


##########################################################
# Experiments
##########################################################
@cli.command('bias')
@run_options
@reports_errors
def bias_cmd(config_path: Path, out_dir: Optional[Path], seed: Optional[int],
             deterministic: Optional[bool]) -> None:
    """Train both architectures on three skewed corpora and compare spreads."""
    cfg, out = _load(config_path, seed, deterministic, out_dir)
    model_cfg = cfg.model_for_run()

    def factory(with_completion: bool, run_seed: int):
        return build_model(model_cfg.model_copy(update={'completion': with_completion,
                                                        'seed': run_seed}))

    report = bias_experiment(cfg.corpus, factory, cfg.train, cfg.loss_for_run(),
                             eval_records=list(gen_corpus(cfg.eval_spec())),
                             seeds=[cfg.seed + k for k in range(cfg.eval.n_seeds)],
                             workers=cfg.workers)
    write_bias_report(report, out / BIAS_REPORT)
    render_bias_report(report, console)
    failures = sum(len(a.failures) for a in report.architectures)
    if failures:
        raise click.ClickException(f'{failures} training runs diverged; see {out / BIAS_REPORT}')


@cli.command('ablate')
@run_options
@click.option('--study', type=click.Choice(sorted(STUDIES)), default='components',
              show_default=True)
@reports_errors
def ablate_cmd(config_path: Path, out_dir: Optional[Path], seed: Optional[int],
               deterministic: Optional[bool], study: str) -> None:
    """Sweep one group of ablation switches over several seeds."""
    cfg, out = _load(config_path, seed, deterministic, out_dir)
    seeds = [cfg.seed + k for k in range(cfg.eval.n_seeds)]
    summaries = run_study(cfg, study, seeds, out / 'ablate')
    write_summaries(summaries, out / 'ablate' / f'{study}.jsonl')
    render_summaries(summaries, console)


@cli.command('gradcheck')
@click.option('--seeds', type=int, default=3, show_default=True)
@click.option('--skip-pipeline', is_flag=True, help='Check registered ops only.')
@reports_errors
def gradcheck_cmd(seeds: int, skip_pipeline: bool) -> None:
    """Finite-difference check of every op and of the training step."""
    reports: List[GradCheckReport] = run_suite(OP_CASES, seeds=range(seeds))
    if not skip_pipeline:
        reports += run_suite(PIPELINE_CASES, seeds=range(seeds))
    table = Table(title='Gradient checks')
    table.add_column('check')
    table.add_column('max rel error', justify='right')
    table.add_column('elements', justify='right')
    table.add_column('result')
    for r in reports:
        table.add_row(r.name, f'{r.max_rel_error:.2e}', str(r.n_checked),
                      '[green]pass[/green]' if r.passed else f'[red]FAIL[/red] {r.message}')
    console.print(table)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        raise click.ClickException(f'gradient check failed: {", ".join(failed)}')


##########################################################
# Saved results
##########################################################
def _detect(path: Path) -> str:
    with path.open('r', encoding='utf-8') as fh:
        for line in fh:
            if not line.strip() or line.startswith('#'):
                continue
            try:
                payload = json.loads(line)
            except ValueError:
                return 'trace'
            if not isinstance(payload, dict):
                return 'trace'
            if 'kind' in payload:
                return 'score'
            if 'architecture' in payload:
                return 'bias'
            if 'cell' in payload:
                return 'ablation'
            break
    raise click.ClickException(f'{path}: not a loss trace or report')


@cli.command('report')
@click.argument('path', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--every', type=int, default=50, show_default=True,
              help='Loss trace rows to skip between printed steps.')
@reports_errors
def report_cmd(path: Path, every: int) -> None:
    """Print a saved loss trace, score report, bias report or ablation summary."""
    kind = _detect(path)
    if kind == 'score':
        render_score_report(read_score_report(path), console)
    elif kind == 'bias':
        render_bias_report(read_bias_report(path), console)
    elif kind == 'ablation':
        render_summaries(read_summaries(path), console)
    else:
        rows = read_loss_trace(path)
        table = Table(title=f'Loss trace ({len(rows)} steps)')
        table.add_column('step', justify='right')
        table.add_column('loss', justify='right')
        for step, loss in rows:
            if step % max(every, 1) == 0 or step == rows[-1][0]:
                table.add_row(str(step), f'{loss:.6f}')
        console.print(table)


def main() -> None:
    cli(prog_name='unimoco')
