########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import os

import hypothesis
import numpy as np
import pytest

from unimoco.corpus import CorpusSpec, TaskTag, balanced_counts, gen_corpus
from unimoco.model import ModelConfig, UniMoCoModel

np.seterr(all="warn")

hypothesis.settings.register_profile("dev", max_examples=25, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))


TINY_CONFIG = """
corpus.seed = 3
corpus.vocab_size = 16
corpus.P = 4
corpus.D_in = 3
corpus.n_classes = 4
corpus.n_ood_classes = 2
corpus.count.TI_T = 8
corpus.count.T_TI = 8
corpus.count.TI_TI = 8
corpus.task.retrieval = 1.0

eval.count.TI_T = 4
eval.count.T_TI = 4
eval.count.TI_TI = 4
eval.ood_fraction = 0.25
eval.n_seeds = 1

model.d_model = 8
model.n_layers = 1
model.n_heads = 2
model.V = 4
model.max_seq_len = 16

train.batch_size = 4
train.steps = 3
loss.tau = 0.5
"""


@pytest.fixture
def tiny_spec() -> CorpusSpec:
    return CorpusSpec(seed=3, vocab_size=16, P=4, D_in=3, n_classes=4, n_ood_classes=2,
                      counts=balanced_counts(12), task_mix={TaskTag.RETRIEVAL: 1.0},
                      content_length=2)


@pytest.fixture
def tiny_cfg() -> ModelConfig:
    return ModelConfig(d_model=8, n_layers=1, n_heads=2, vocab_size=16, V=4, P=4, D_in=3,
                       max_seq_len=16, seed=3)


@pytest.fixture
def tiny_model(tiny_cfg) -> UniMoCoModel:
    return UniMoCoModel(tiny_cfg)


@pytest.fixture
def tiny_corpus(tiny_spec):
    return list(gen_corpus(tiny_spec))


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.conf"
    path.write_text(TINY_CONFIG)
    return path
