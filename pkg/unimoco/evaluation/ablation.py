########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Ablation sweeps over the completion module, T2I depth, alpha and padding.

Every cell of a study trains a fresh model per seed on the same corpus with the
same initialization substreams, so cells differ only in their switches.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from unimoco.config import RunConfig
from unimoco.corpus.synth import gen_corpus
from unimoco.corpus.types import ModalityCombo
from unimoco.evaluation.report import ScoreReport, evaluate, write_score_report
from unimoco.model.core import build_model
from unimoco.training.adapters import apply_low_rank_adapters
from unimoco.training.trainer import train


logger = logging.getLogger(__name__)

STUDIES: Dict[str, Dict[str, Dict[str, Any]]] = {
    'components': {
        'baseline': {'disable_completion': True, 'alpha': 0.0},
        't2i_only': {'disable_aux_encoder': True, 'disable_padding': True},
        'with_encoder': {'disable_padding': True},
        'with_padding': {'disable_aux_encoder': True},
        'full': {},
    },
    'capacity': {f't2i_layers_{n}': {'t2i_layers': n} for n in (1, 2, 4)},
    'alpha': {f'alpha_{a}': {'alpha': a} for a in (0.0, 0.1, 0.2, 0.3, 0.4)},
    'padding': {
        'full': {},
        'half': {'half_padding': True},
        'none': {'disable_padding': True},
    },
}


class CellSummary(BaseModel):
    study: str
    cell: str
    seeds: List[int]
    overall: float
    per_combo: Dict[ModalityCombo, float]


def run_cell(cfg: RunConfig, workers: int = 1) -> ScoreReport:
    """Generate data, train and evaluate once for one configuration."""
    train_records = list(gen_corpus(cfg.corpus))
    eval_records = list(gen_corpus(cfg.eval_spec()))
    model = build_model(cfg.model_for_run())
    if cfg.adapter.enabled:
        apply_low_rank_adapters(model, cfg.adapter)
    train(train_records, model, cfg.train, cfg.loss_for_run())
    return evaluate(eval_records, model, workers)


def summarize(study: str, cell: str, seeds: Sequence[int],
              reports: Sequence[ScoreReport]) -> CellSummary:
    combos = [c for c in ModalityCombo if all(c in r.per_combo for r in reports)]
    return CellSummary(
        study=study,
        cell=cell,
        seeds=list(seeds),
        overall=float(np.mean([r.overall for r in reports])),
        per_combo={c: float(np.mean([r.per_combo[c] for r in reports])) for c in combos},
    )


def run_study(cfg: RunConfig, study: str, seeds: Sequence[int],
              out_dir: Optional[Union[str, Path]] = None) -> List[CellSummary]:
    summaries = []
    for cell, switches in STUDIES[study].items():
        reports = []
        for seed in seeds:
            cell_cfg = cfg.with_seed(seed).with_switches(**switches)
            logger.info('%s/%s seed %d', study, cell, seed)
            report = run_cell(cell_cfg, cfg.workers)
            if out_dir is not None:
                write_score_report(report, Path(out_dir) / study / cell / f'seed{seed}.jsonl')
            reports.append(report)
        summaries.append(summarize(study, cell, seeds, reports))
    return summaries


def write_summaries(summaries: Sequence[CellSummary], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='\n') as fh:
        for summary in summaries:
            fh.write(json.dumps(summary.model_dump(mode='json'), sort_keys=True))
            fh.write('\n')
    return path


def read_summaries(path: Union[str, Path]) -> List[CellSummary]:
    with Path(path).open('r', encoding='utf-8') as fh:
        return [CellSummary.model_validate_json(line) for line in fh if line.strip()]


def render_summaries(summaries: Sequence[CellSummary], console: Optional[Console] = None) -> None:
    console = console or Console()
    if not summaries:
        return
    table = Table(title=f'Ablation: {summaries[0].study} (mean P@1 over seeds)')
    table.add_column('cell')
    for combo in ModalityCombo:
        table.add_column(combo.label, justify='right')
    table.add_column('overall', justify='right')
    for s in summaries:
        cells = [f'{s.per_combo[c]:.4f}' if c in s.per_combo else '-' for c in ModalityCombo]
        table.add_row(s.cell, *cells, f'{s.overall:.4f}')
    console.print(table)
