########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import itertools

import pytest

from tests.conftest import TINY_CONFIG
from unimoco.config import build_run_config, load_run_config, parse_config_text
from unimoco.corpus import ModalityCombo, TaskTag
from unimoco.exceptions import ConfigError
from unimoco.model import PaddingMode


def _drop(text, prefix):
    return '\n'.join(line for line in text.splitlines() if not line.startswith(prefix))


def test_tiny_config(config_file):
    cfg = load_run_config(config_file)
    assert cfg.seed == 3
    assert cfg.corpus.counts[ModalityCombo.TI_TI] == 8
    assert cfg.corpus.task_mix == {TaskTag.RETRIEVAL: 1.0}
    assert (cfg.model.vocab_size, cfg.model.P, cfg.model.D_in) == (16, 4, 3)
    assert cfg.model.seed == cfg.train.seed == 3
    assert cfg.loss.tau == 0.5


def test_seed_override_reaches_every_consumer(config_file):
    cfg = load_run_config(config_file, seed_override=11)
    assert cfg.corpus.seed == cfg.model.seed == cfg.train.seed == cfg.adapter.seed == 11


def test_values_keep_their_types():
    sections = parse_config_text('run.out_dir = runs/x\nrun.alpha = 0.1\nrun.deterministic = false\n')
    assert sections['run'] == {'out_dir': 'runs/x', 'alpha': 0.1, 'deterministic': False}


@pytest.mark.parametrize('prefix, key', [
    ('corpus.seed', 'corpus.seed'),
    ('corpus.count.', 'corpus.count.*'),
])
def test_missing_required_key(prefix, key):
    with pytest.raises(ConfigError) as info:
        build_run_config(parse_config_text(_drop(TINY_CONFIG, prefix)))
    assert info.value.key == key


@pytest.mark.parametrize('line, key', [
    ('model.depth = 3', 'model.depth'),
    ('colour.red = 1', 'colour.red'),
    ('padding.width = 2', 'padding.width'),
    ('model.vocab_size = 32', 'model.vocab_size'),
    ('corpus.seed = 4', 'corpus.seed'),
])
def test_rejected_keys(line, key):
    with pytest.raises(ConfigError) as info:
        build_run_config(parse_config_text(TINY_CONFIG + line + '\n'))
    assert info.value.key == key


def test_line_without_equals():
    with pytest.raises(ConfigError, match='line 2'):
        parse_config_text('corpus.seed = 1\njust words\n')


def test_invalid_value_names_its_key():
    with pytest.raises(ConfigError) as info:
        build_run_config(parse_config_text(TINY_CONFIG + 'train.batch_size = 1\n'))
    assert info.value.key == 'train.batch_size'


def test_content_that_cannot_be_padded():
    with pytest.raises(ConfigError) as info:
        build_run_config(parse_config_text(TINY_CONFIG + 'padding.mode = half\n'))
    assert info.value.key == 'corpus.content_length'


def test_padding_section_maps_to_model(config_file):
    cfg = build_run_config(parse_config_text(TINY_CONFIG + 'padding.mode = none\n'))
    assert cfg.model.padding is PaddingMode.NONE


@pytest.mark.parametrize('flags', list(itertools.product([False, True], repeat=4)))
def test_ablation_switches_compose(config_file, flags):
    cfg = load_run_config(config_file).with_switches(
        disable_completion=flags[0], disable_aux_encoder=flags[1],
        disable_padding=flags[2], half_padding=flags[3], t2i_layers=4, alpha=0.0)
    model_cfg = cfg.model_for_run()
    assert model_cfg.completion is not flags[0]
    assert model_cfg.aux_encoder is not flags[1]
    assert model_cfg.t2i_layers == 4
    if flags[2]:
        assert model_cfg.padding is PaddingMode.NONE
    elif flags[3]:
        assert model_cfg.padding is PaddingMode.HALF
    assert cfg.loss_for_run().alpha == 0.0


def test_eval_spec_shares_prototype_seed(config_file):
    cfg = load_run_config(config_file)
    spec = cfg.eval_spec()
    assert spec.seed == cfg.corpus.seed
    assert spec.stream == 'eval'
    assert spec.total == 12
