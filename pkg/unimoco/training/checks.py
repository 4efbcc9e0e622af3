########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""End-to-end gradient checks on a two-layer toy model."""

from typing import Dict, List, Tuple

import numpy as np

from unimoco.corpus.synth import balanced_counts, gen_corpus
from unimoco.corpus.types import CorpusSpec
from unimoco.model.config import ModelConfig
from unimoco.model.core import UniMoCoModel
from unimoco.numerics import Tensor
from unimoco.numerics.gradcheck import PIPELINE_TOLERANCE, GradCheckCase
from unimoco.training.losses import LossConfig
from unimoco.training.trainer import step_losses


def toy_setup(seed: int) -> Tuple[UniMoCoModel, list]:
    spec = CorpusSpec(seed=seed, vocab_size=16, P=5, D_in=3, n_classes=4, n_ood_classes=0,
                      counts=balanced_counts(3), sigma=0.5, content_length=2)
    cfg = ModelConfig(d_model=8, n_layers=2, n_heads=2, vision_layers=1, t2i_layers=2,
                      aux_layers=1, vocab_size=16, V=4, P=5, D_in=3, max_seq_len=16, seed=seed)
    return UniMoCoModel(cfg), list(gen_corpus(spec))


def _checked_tensors(model: UniMoCoModel) -> List[Tensor]:
    # One tensor from every route: vision, projector, completion and backbone.
    return [
        model.vision.pool,
        model.projector.fc_out.bias,
        model.completion.lm.ln_final.gamma,
        model.completion.aux_encoder.patch_embed.bias,
        model.backbone.blocks[-1].proj.bias,
        model.backbone.ln_final.beta,
    ]


def _embed_pipeline(rng: np.random.Generator):
    model, records = toy_setup(int(rng.integers(0, 2 ** 31)))
    items = [r.query for r in records] + [r.positive_target for r in records]
    return (lambda *_: model.embed_batch(items)), _checked_tensors(model)


def _training_step(rng: np.random.Generator):
    model, records = toy_setup(int(rng.integers(0, 2 ** 31)))
    cfg = LossConfig(tau=0.5, alpha=0.2)
    return (lambda *_: step_losses(records, model, cfg).total), _checked_tensors(model)


PIPELINE_CASES: Dict[str, GradCheckCase] = {
    'embed_pipeline': GradCheckCase(_embed_pipeline, PIPELINE_TOLERANCE),
    'training_step': GradCheckCase(_training_step, PIPELINE_TOLERANCE),
}
