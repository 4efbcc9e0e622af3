########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Precision@1 per candidate bucket and its task, combo and split aggregates.

Each (task_tag, split, target modality) bucket holds one candidate per latent
class: the positive target of the first record of that class in the bucket, so
a query is always scored against candidates of its own target modality. A query
is correct when its best match is its own class's candidate. Buckets with a
single candidate are reported but left out of every aggregate.
"""

import json
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from rich.console import Console
from rich.table import Table

from unimoco.corpus.types import ModalityCombo, PairRecord, Split, TaskTag
from unimoco.evaluation.retrieval import Embedder, build_index, embed_inputs, precision_at_1
from unimoco.exceptions import ContractError


logger = logging.getLogger(__name__)


class BucketScore(BaseModel):
    task_tag: TaskTag
    split: Split
    target_image: bool = False
    n_queries: int
    n_candidates: int
    p_at_1: float = Field(ge=0.0, le=1.0)
    degenerate: bool = False
    # Correct counts per combo let aggregates stay query-weighted.
    combo_queries: Dict[ModalityCombo, int] = Field(default_factory=dict)
    combo_correct: Dict[ModalityCombo, int] = Field(default_factory=dict)


class ScoreReport(BaseModel):
    buckets: List[BucketScore]
    per_task: Dict[TaskTag, float]
    per_combo: Dict[ModalityCombo, float]
    ind: Optional[float] = None
    ood: Optional[float] = None
    overall: float = Field(ge=0.0, le=1.0)

    @property
    def n_queries(self) -> int:
        return sum(b.n_queries for b in self.buckets)


def _rate(correct: int, total: int) -> Optional[float]:
    return correct / total if total else None


BucketKey = Tuple[TaskTag, Split, bool]


def bucket_key(record: PairRecord) -> BucketKey:
    return record.task_tag, record.split, record.positive_target.has_image


def group_buckets(records: Sequence[PairRecord]) -> Dict[BucketKey, List[PairRecord]]:
    """Records per bucket, buckets in task, split, text-then-image order."""
    groups: Dict[BucketKey, List[PairRecord]] = {}
    for record in records:
        groups.setdefault(bucket_key(record), []).append(record)
    order = sorted(groups, key=lambda key: (list(TaskTag).index(key[0]),
                                            list(Split).index(key[1]), key[2]))
    return OrderedDict((key, groups[key]) for key in order)


def candidate_pool(records: Sequence[PairRecord]) -> Dict[int, int]:
    """Class id to the position of its candidate target within ``records``."""
    if len({bucket_key(r) for r in records}) > 1:
        raise ContractError('candidate pool spans several buckets')
    pool: Dict[int, int] = OrderedDict()
    for position, record in enumerate(records):
        pool.setdefault(record.class_id, position)
    return pool


def score_bucket(records: Sequence[PairRecord], model: Embedder, workers: int = 1) -> BucketScore:
    first = records[0]
    pool = candidate_pool(records)
    index = build_index([records[p].positive_target for p in pool.values()], model,
                        ids=list(pool.values()), workers=workers)

    predictions = index.best(embed_inputs(model, [r.query for r in records], workers))
    gold = [pool[r.class_id] for r in records]
    combo_queries: Dict[ModalityCombo, int] = {}
    combo_correct: Dict[ModalityCombo, int] = {}
    for record, predicted, expected in zip(records, predictions, gold):
        combo_queries[record.combo] = combo_queries.get(record.combo, 0) + 1
        combo_correct[record.combo] = combo_correct.get(record.combo, 0) + int(predicted == expected)

    bucket = BucketScore(task_tag=first.task_tag, split=first.split,
                         target_image=first.positive_target.has_image, n_queries=len(records),
                         n_candidates=len(index), p_at_1=precision_at_1(predictions, gold),
                         degenerate=len(index) == 1, combo_queries=combo_queries,
                         combo_correct=combo_correct)
    if bucket.degenerate:
        logger.warning('bucket %s/%s/%s has a single candidate; excluded from aggregates',
                       bucket.task_tag.value, bucket.split.value,
                       'image' if bucket.target_image else 'text')
    return bucket


def aggregate(buckets: List[BucketScore]) -> ScoreReport:
    counted = [b for b in buckets if not b.degenerate]
    if not counted:
        raise ContractError('every evaluation bucket is degenerate')

    def correct(b: BucketScore) -> int:
        return sum(b.combo_correct.values())

    per_task: Dict[TaskTag, float] = {}
    for tag in TaskTag:
        group = [b for b in counted if b.task_tag is tag]
        if group:
            per_task[tag] = _rate(sum(map(correct, group)), sum(b.n_queries for b in group))
    per_combo: Dict[ModalityCombo, float] = {}
    for combo in ModalityCombo:
        total = sum(b.combo_queries.get(combo, 0) for b in counted)
        if total:
            per_combo[combo] = sum(b.combo_correct.get(combo, 0) for b in counted) / total
    by_split = {
        split: _rate(sum(correct(b) for b in counted if b.split is split),
                     sum(b.n_queries for b in counted if b.split is split))
        for split in Split
    }
    return ScoreReport(
        buckets=buckets,
        per_task=per_task,
        per_combo=per_combo,
        ind=by_split[Split.IND],
        ood=by_split[Split.OOD],
        overall=sum(map(correct, counted)) / sum(b.n_queries for b in counted),
    )


def evaluate(records: Sequence[PairRecord], model: Embedder, workers: int = 1) -> ScoreReport:
    if not records:
        raise ContractError('evaluate: empty evaluation corpus')
    buckets = [score_bucket(group, model, workers) for group in group_buckets(records).values()]
    report = aggregate(buckets)
    logger.info('evaluated %d queries in %d buckets: overall P@1 %.4f',
                report.n_queries, len(buckets), report.overall)
    return report


##########################################################
# Serialization and display
##########################################################
def write_score_report(report: ScoreReport, path: Union[str, Path]) -> Path:
    """One ``bucket`` line per bucket, then one ``summary`` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='\n') as fh:
        for bucket in report.buckets:
            fh.write(json.dumps({'kind': 'bucket', **bucket.model_dump(mode='json')}, sort_keys=True))
            fh.write('\n')
        summary = report.model_dump(mode='json', exclude={'buckets'})
        fh.write(json.dumps({'kind': 'summary', **summary}, sort_keys=True))
        fh.write('\n')
    return path


def read_score_report(path: Union[str, Path]) -> ScoreReport:
    buckets, summary = [], None
    with Path(path).open('r', encoding='utf-8') as fh:
        for line in fh:
            if not line.strip():
                continue
            payload = json.loads(line)
            kind = payload.pop('kind', None)
            if kind == 'bucket':
                buckets.append(BucketScore.model_validate(payload))
            elif kind == 'summary':
                summary = payload
    if summary is None:
        raise ContractError(f'{path} has no summary line')
    return ScoreReport.model_validate({**summary, 'buckets': buckets})


def _fmt(value: Optional[float]) -> str:
    return '-' if value is None else f'{value:.4f}'


def render_score_report(report: ScoreReport, console: Optional[Console] = None,
                        title: str = 'Precision@1') -> None:
    console = console or Console()
    buckets = Table(title=f'{title} by bucket')
    for column in ('task', 'split', 'target', 'queries', 'candidates', 'P@1', 'note'):
        buckets.add_column(column, justify='right' if column in ('queries', 'candidates', 'P@1')
                           else 'left')
    for b in report.buckets:
        buckets.add_row(b.task_tag.value, b.split.value, 'T+I' if b.target_image else 'T',
                        str(b.n_queries), str(b.n_candidates),
                        _fmt(b.p_at_1), 'degenerate' if b.degenerate else '')
    console.print(buckets)

    summary = Table(title=f'{title} summary')
    summary.add_column('aggregate')
    summary.add_column('P@1', justify='right')
    for tag, value in report.per_task.items():
        summary.add_row(f'task {tag.value}', _fmt(value))
    for combo, value in report.per_combo.items():
        summary.add_row(f'combo {combo.label}', _fmt(value))
    summary.add_row('IND', _fmt(report.ind))
    summary.add_row('OOD', _fmt(report.ood))
    summary.add_row('overall', _fmt(report.overall))
    console.print(summary)


def combo_spread(report: ScoreReport) -> Optional[float]:
    """Population standard deviation of P@1 across the three combos."""
    if len(report.per_combo) != len(ModalityCombo):
        return None
    return float(np.std([report.per_combo[c] for c in ModalityCombo]))
