########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Desk-scale trend checks on the default configuration.

Each test trains several models for minutes; run with ``pytest -m slow``.
"""

import functools
from pathlib import Path

import numpy as np
import pytest

from unimoco.config import load_run_config
from unimoco.corpus import ModalityCombo, Split, TaskTag, gen_corpus
from unimoco.evaluation import evaluate, lower_spread_count
from unimoco.evaluation.ablation import run_cell
from unimoco.evaluation.bias import bias_experiment
from unimoco.model import build_model
from unimoco.training import AdapterConfig, apply_low_rank_adapters

pytestmark = pytest.mark.slow

DEFAULT_CONFIG = Path(__file__).resolve().parents[1] / 'configs' / 'default.conf'
SEEDS = (0, 1, 2)


@functools.lru_cache(maxsize=None)
def _base():
    return load_run_config(DEFAULT_CONFIG)


@functools.lru_cache(maxsize=None)
def _report(seed: int, **switches):
    return run_cell(_base().with_seed(seed).with_switches(**switches))


def _mean(metric, **switches) -> float:
    return float(np.mean([metric(_report(seed, **switches)) for seed in SEEDS]))


def _ind_buckets(report):
    return [b for b in report.buckets if b.task_tag is TaskTag.RETRIEVAL and b.split is Split.IND]


def _ind_rate(report, combo: ModalityCombo) -> float:
    buckets = _ind_buckets(report)
    correct = sum(b.combo_correct.get(combo, 0) for b in buckets)
    return correct / sum(b.combo_queries.get(combo, 0) for b in buckets)


def test_untrained_model_is_at_chance():
    cfg = _base()
    model = build_model(cfg.model_for_run())
    report = evaluate(list(gen_corpus(cfg.eval_spec())), model)
    n = sum(b.combo_queries.get(ModalityCombo.TI_T, 0) for b in _ind_buckets(report))
    chance = 1.0 / cfg.corpus.n_classes
    sigma = np.sqrt(chance * (1.0 - chance) / n)
    assert abs(_ind_rate(report, ModalityCombo.TI_T) - chance) <= 3 * sigma


def test_trained_model_learns_in_distribution_retrieval():
    assert _ind_rate(_report(0), ModalityCombo.TI_T) >= 0.90


def test_completion_beats_zero_fill_on_missing_images():
    def missing(report):
        return report.per_combo[ModalityCombo.T_TI]

    full = _mean(missing)
    assert full - _mean(missing, disable_completion=True, alpha=0.0) >= 0.05
    assert full - _mean(missing, disable_padding=True) >= 0.02


def test_alignment_loss_does_not_hurt():
    assert _mean(lambda r: r.overall, alpha=0.2) >= _mean(lambda r: r.overall, alpha=0.0)


def test_deeper_t2i_does_not_hurt():
    scores = [_mean(lambda r: r.overall, t2i_layers=n) for n in (1, 2, 4)]
    drops = [a - b for a, b in zip(scores, scores[1:]) if b < a]
    assert len(drops) <= 1
    assert all(d <= 0.01 for d in drops)


def test_completion_reduces_combo_bias():
    cfg = _base()
    model_cfg = cfg.model_for_run()

    def factory(with_completion: bool, seed: int):
        return build_model(model_cfg.model_copy(update={'completion': with_completion,
                                                        'seed': seed}))

    # Skewed variants need a total divisible by four.
    spec = cfg.corpus.model_copy(update={'counts': {c: 1000 for c in ModalityCombo}})
    spec = spec.model_copy(update={'counts': {**spec.counts, ModalityCombo.TI_T: 2000}})
    report = bias_experiment(spec, factory, cfg.train, cfg.loss_for_run(),
                             eval_records=list(gen_corpus(cfg.eval_spec())), seeds=SEEDS)
    assert lower_spread_count(report) >= 2


def test_zero_initialized_adapters_leave_scores_unchanged():
    cfg = _base()
    records = list(gen_corpus(cfg.eval_spec()))
    model = build_model(cfg.model_for_run())
    before = evaluate(records, model)
    apply_low_rank_adapters(model, AdapterConfig(enabled=True, rank=8))
    assert evaluate(records, model) == before


def test_adapter_only_training_keeps_most_of_full_fine_tuning():
    cfg = _base()
    adapted = run_cell(cfg.model_copy(update={'adapter': AdapterConfig(enabled=True, rank=8)}))
    assert _ind_rate(adapted, ModalityCombo.TI_T) >= 0.8 * _ind_rate(_report(0), ModalityCombo.TI_T)
