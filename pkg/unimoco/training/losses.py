########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Contrastive objective, auxiliary cross-modal alignment and their sum."""

import enum
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from unimoco.corpus.types import PairRecord
from unimoco.exceptions import ContractError
from unimoco.model.core import UniMoCoModel, drop_image
from unimoco.numerics import Tensor, concat, log_softmax, matmul, softmax, softmax_cross_entropy, take


UNIT_NORM_ATOL = 1e-3


class AuxDistance(str, enum.Enum):
    CROSS_ENTROPY = 'cross_entropy'
    MSE = 'mse'
    COSINE = 'cosine'


class LossConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    tau: float = Field(default=0.02, gt=0.0)
    alpha: float = Field(default=0.2, ge=0.0)
    aux_temp: float = Field(default=1.0, gt=0.0)
    stop_grad_target: bool = True
    aux_distance: AuxDistance = AuxDistance.CROSS_ENTROPY


def _check_unit_rows(name: str, x: Tensor) -> None:
    norms = np.sqrt((x.data ** 2).sum(axis=-1))
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_ATOL):
        raise ContractError(f'info_nce: {name} rows are not unit-norm (max deviation '
                            f'{float(np.abs(norms - 1.0).max()):.3e})')


def info_nce(query_embs: Tensor, target_embs: Tensor, tau: float) -> Tensor:
    """Mean -log p(c_i | q_i) with the other in-batch targets as negatives."""
    if query_embs.ndim != 2 or query_embs.shape != target_embs.shape:
        raise ContractError(f'info_nce: query {query_embs.shape} and target '
                            f'{target_embs.shape} batches differ')
    if tau <= 0:
        raise ContractError(f'info_nce: tau must be > 0, got {tau}')
    _check_unit_rows('query', query_embs)
    _check_unit_rows('target', target_embs)

    batch = np.arange(query_embs.shape[0])
    logits = matmul(query_embs, target_embs.T) * (1.0 / tau)
    return -log_softmax(logits)[batch, batch].mean()


def alignment_distance(real: Tensor, pseudo: Tensor, cfg: LossConfig) -> Tensor:
    """Per-row distance between embeddings with and without the image."""
    if cfg.stop_grad_target:
        real = real.detach()
    if cfg.aux_distance is AuxDistance.MSE:
        diff = real - pseudo
        return (diff * diff).sum(axis=-1)
    if cfg.aux_distance is AuxDistance.COSINE:
        return 1.0 - (real * pseudo).sum(axis=-1)
    scale = 1.0 / cfg.aux_temp
    return softmax_cross_entropy(pseudo * scale, softmax(real * scale))


def aux_loss(pairs: Sequence[PairRecord], model: UniMoCoModel, cfg: LossConfig,
             query_embs: Optional[Tensor] = None,
             target_embs: Optional[Tensor] = None) -> Tensor:
    """Alignment of each imaged side with its image-dropped counterpart, over B.

    Sides without an image contribute nothing. Already computed embeddings of
    the batch can be passed in to avoid a second forward pass.
    """
    if not pairs:
        raise ContractError('aux_loss: empty batch')

    q_index = [i for i, pair in enumerate(pairs) if pair.query.has_image]
    t_index = [i for i, pair in enumerate(pairs) if pair.positive_target.has_image]
    if not q_index and not t_index:
        return Tensor(0.0)

    imaged = [pairs[i].query for i in q_index] + [pairs[i].positive_target for i in t_index]
    if query_embs is None or target_embs is None:
        real = model.embed_batch(imaged)
    else:
        parts = []
        if q_index:
            parts.append(take(query_embs, q_index))
        if t_index:
            parts.append(take(target_embs, t_index))
        real = parts[0] if len(parts) == 1 else concat(parts, axis=0)

    pseudo = model.embed_batch([drop_image(item) for item in imaged])
    return alignment_distance(real, pseudo, cfg).sum() * (1.0 / len(pairs))


def composite_loss(l1: Union[Tensor, float], l2: Union[Tensor, float, None],
                   alpha: float) -> Union[Tensor, float]:
    if alpha == 0 or l2 is None:
        return l1
    return l1 + alpha * l2
