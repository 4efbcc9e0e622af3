########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Low-rank adapters on linear layers.

An adapted layer computes ``x W^T + b + scaling * (x A^T) B^T`` with ``A``
rank-by-in and ``B`` out-by-rank. ``B`` starts at zero, so a freshly adapted
model computes exactly what the base model computes.
"""

import logging
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from unimoco.exceptions import ConfigError
from unimoco.model.core import UniMoCoModel
from unimoco.model.layers import Linear, Module
from unimoco.numerics import Tensor, matmul
from unimoco.seeding import substream


logger = logging.getLogger(__name__)


class AdapterConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    enabled: bool = False
    rank: int = Field(default=8, ge=1)
    scaling: float = 1.0
    # Attribute names of the Linear layers that receive adapters.
    targets: List[str] = Field(default_factory=lambda: ['qkv', 'proj', 'fc_in', 'fc_out'])
    seed: int = 0


class LowRankAdapter(Module):

    def __init__(self, in_features: int, out_features: int, rank: int, scaling: float,
                 rng: np.random.Generator) -> None:
        self.lora_a = Tensor(rng.standard_normal((rank, in_features)) / np.sqrt(in_features),
                             requires_grad=True)
        self.lora_b = Tensor(np.zeros((out_features, rank)), requires_grad=True)
        self.scaling = scaling

    @property
    def rank(self) -> int:
        return self.lora_a.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        return matmul(matmul(x, self.lora_a.T), self.lora_b.T) * self.scaling


def adapter_targets(model: Module, cfg: AdapterConfig) -> List[Tuple[str, Linear]]:
    return [(name, module) for name, module in model.named_modules()
            if isinstance(module, Linear) and name.rsplit('.', 1)[-1] in cfg.targets]


def apply_low_rank_adapters(model: UniMoCoModel, cfg: AdapterConfig) -> UniMoCoModel:
    """Freeze every base parameter and attach a trainable adapter to each target."""
    targets = adapter_targets(model, cfg)
    if not targets:
        raise ConfigError(f'no linear layer matches {cfg.targets}', key='adapter.targets')
    for name, layer in targets:
        smallest = min(layer.in_features, layer.out_features)
        if cfg.rank >= smallest:
            raise ConfigError(f'rank {cfg.rank} is not below the smallest dimension {smallest} '
                              f'of {name}', key='adapter.rank')

    for _, p in model.named_parameters():
        p.requires_grad = False
    rng = substream(cfg.seed, 'init/adapters')
    for _, layer in targets:
        layer.adapter = LowRankAdapter(layer.in_features, layer.out_features, cfg.rank,
                                       cfg.scaling, rng)
    model.adapter_config = cfg
    logger.info('attached rank-%d adapters to %d layers (%d trainable parameters)', cfg.rank,
                len(targets), sum(p.size for p in model.trainable_parameters().values()))
    return model
