########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Modality-combination bias: train on skewed corpora, score on a balanced one.

Each training variant gives half of its pairs to one combo and a quarter to
each of the others. Both architectures see the same corpora and the same seeds,
so differences between them come from the completion module alone.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field
from rich.console import Console
from rich.table import Table

from unimoco.corpus.synth import balanced_counts, combo_tallies, gen_corpus, skewed_counts
from unimoco.corpus.types import CorpusSpec, ModalityCombo, PairRecord
from unimoco.evaluation.report import evaluate
from unimoco.exceptions import ContractError, TrainingDivergedError
from unimoco.model.core import UniMoCoModel
from unimoco.training.losses import LossConfig
from unimoco.training.trainer import TrainConfig, train


logger = logging.getLogger(__name__)

COMPLETION = 'completion'
BASELINE = 'baseline'

# (with_completion, seed) -> freshly initialized model
ModelFactory = Callable[[bool, int], UniMoCoModel]


class BiasCell(BaseModel):
    variant: ModalityCombo
    eval_combo: ModalityCombo
    p_at_1: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    seeds_ok: int = 0
    failed: bool = False


class ArchitectureBias(BaseModel):
    architecture: str
    cells: List[BiasCell]
    stddev: Dict[ModalityCombo, Optional[float]]
    failures: List[str] = Field(default_factory=list)

    def cell(self, variant: ModalityCombo, eval_combo: ModalityCombo) -> BiasCell:
        return next(c for c in self.cells if c.variant is variant and c.eval_combo is eval_combo)

    def matrix(self) -> List[List[Optional[float]]]:
        return [[self.cell(v, e).p_at_1 for e in ModalityCombo] for v in ModalityCombo]


class BiasReport(BaseModel):
    architectures: List[ArchitectureBias]
    seeds: List[int]

    def get(self, architecture: str) -> ArchitectureBias:
        return next(a for a in self.architectures if a.architecture == architecture)


def default_eval_spec(base_spec: CorpusSpec, total: int = 600) -> CorpusSpec:
    return base_spec.model_copy(update={'stream': 'eval', 'counts': balanced_counts(total)})


def variant_corpus(base_spec: CorpusSpec, dominant: ModalityCombo) -> List[PairRecord]:
    counts = skewed_counts(base_spec.total, dominant)
    records = list(gen_corpus(base_spec.model_copy(update={'counts': counts})))
    tallies = combo_tallies(records)
    if tallies != counts:
        raise ContractError(f'variant {dominant.value}: tallies {tallies} differ from {counts}')
    logger.info('variant %s tallies %s', dominant.value,
                {c.value: n for c, n in tallies.items()})
    return records


def bias_experiment(base_spec: CorpusSpec, model_factory: ModelFactory, train_cfg: TrainConfig,
                    loss_cfg: Optional[LossConfig] = None,
                    eval_records: Optional[Sequence[PairRecord]] = None,
                    seeds: Sequence[int] = (0, 1, 2), workers: int = 1) -> BiasReport:
    """3 variants x 3 eval combos of mean P@1 over ``seeds``, for both architectures.

    The baseline architecture trains on the contrastive loss alone. A diverged
    run counts as a failure for its cell; the cell is marked failed only when no
    seed finished.
    """
    total = base_spec.total
    if total <= 0 or total % 4:
        raise ContractError(f'bias experiment needs a total divisible by 4, got {total}')
    loss_cfg = loss_cfg or LossConfig()
    if eval_records is None:
        eval_records = list(gen_corpus(default_eval_spec(base_spec)))
    corpora = {variant: variant_corpus(base_spec, variant) for variant in ModalityCombo}

    architectures = []
    for name, with_completion in ((COMPLETION, True), (BASELINE, False)):
        arch_loss = loss_cfg if with_completion else loss_cfg.model_copy(update={'alpha': 0.0})
        cells, failures, stddev = [], [], {}
        for variant in ModalityCombo:
            scores: Dict[ModalityCombo, List[float]] = {combo: [] for combo in ModalityCombo}
            for seed in seeds:
                model = model_factory(with_completion, seed)
                try:
                    train(corpora[variant], model, train_cfg.model_copy(update={'seed': seed}),
                          arch_loss)
                except TrainingDivergedError as err:
                    failures.append(f'{variant.value} seed {seed}: {err}')
                    logger.warning('%s/%s seed %d diverged: %s', name, variant.value, seed, err)
                    continue
                report = evaluate(eval_records, model, workers)
                for combo, value in report.per_combo.items():
                    scores[combo].append(value)
            row = [BiasCell(variant=variant, eval_combo=combo,
                            p_at_1=float(np.mean(values)) if values else None,
                            seeds_ok=len(values), failed=not values)
                   for combo, values in scores.items()]
            cells.extend(row)
            values = [c.p_at_1 for c in row]
            stddev[variant] = None if None in values else float(np.std(values))
            logger.info('%s trained on %s: %s', name, variant.value, _fmt_row(values))
        architectures.append(ArchitectureBias(architecture=name, cells=cells, stddev=stddev,
                                              failures=failures))
    return BiasReport(architectures=architectures, seeds=list(seeds))


def _fmt_row(values: Sequence[Optional[float]]) -> str:
    return ' '.join('failed' if v is None else f'{v:.4f}' for v in values)


def lower_spread_count(report: BiasReport) -> int:
    """Variants where the completion architecture spreads less across combos."""
    ours, base = report.get(COMPLETION), report.get(BASELINE)
    return sum(
        1 for v in ModalityCombo
        if ours.stddev[v] is not None and base.stddev[v] is not None and ours.stddev[v] < base.stddev[v]
    )


def write_bias_report(report: BiasReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='\n') as fh:
        for arch in report.architectures:
            fh.write(arch.model_dump_json())
            fh.write('\n')
    return path


def read_bias_report(path: Union[str, Path], seeds: Sequence[int] = ()) -> BiasReport:
    with Path(path).open('r', encoding='utf-8') as fh:
        architectures = [ArchitectureBias.model_validate_json(line) for line in fh if line.strip()]
    return BiasReport(architectures=architectures, seeds=list(seeds))


def render_bias_report(report: BiasReport, console: Optional[Console] = None) -> None:
    console = console or Console()
    for arch in report.architectures:
        table = Table(title=f'Modality bias, {arch.architecture}')
        table.add_column('trained on')
        for combo in ModalityCombo:
            table.add_column(f'eval {combo.label}', justify='right')
        table.add_column('stddev', justify='right')
        for variant, row in zip(ModalityCombo, arch.matrix()):
            spread = arch.stddev.get(variant)
            table.add_row(variant.label, *_fmt_row(row).split(),
                          'failed' if spread is None else f'{spread:.4f}')
        console.print(table)
        for failure in arch.failures:
            console.print(f'[red]failed[/red] {failure}')
