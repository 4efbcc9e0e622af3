########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import logging
import math
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from unimoco.corpus.types import PairRecord
from unimoco.exceptions import ContractError, EmptyCorpusError, TrainingDivergedError
from unimoco.model.core import UniMoCoModel
from unimoco.numerics import Tensor
from unimoco.seeding import substream
from unimoco.training.losses import LossConfig, aux_loss, composite_loss, info_nce
from unimoco.training.optim import Adam


logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    batch_size: int = Field(default=64, ge=2)
    steps: int = Field(default=300, ge=0)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    seed: int = 0
    log_every: int = Field(default=50, ge=1)


class TraceEntry(NamedTuple):
    step: int
    loss: float
    l1: float
    l2: float


class StepLosses(NamedTuple):
    total: Tensor
    l1: Tensor
    l2: Optional[Tensor]


class TrainResult(NamedTuple):
    model: UniMoCoModel
    trace: List[TraceEntry]


def step_losses(pairs: Sequence[PairRecord], model: UniMoCoModel, cfg: LossConfig) -> StepLosses:
    """Forward pass of one training step: L1, L2 and L1 + alpha * L2."""
    batch = len(pairs)
    embeddings = model.embed_batch([p.query for p in pairs] + [p.positive_target for p in pairs])
    queries, targets = embeddings[:batch], embeddings[batch:]
    l1 = info_nce(queries, targets, cfg.tau)
    l2 = aux_loss(pairs, model, cfg, queries, targets) if cfg.alpha > 0 else None
    return StepLosses(composite_loss(l1, l2, cfg.alpha), l1, l2)


def snapshot(model: UniMoCoModel) -> Dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in model.named_parameters()}


def train(corpus: Sequence[PairRecord], model: UniMoCoModel, train_cfg: TrainConfig,
          loss_cfg: LossConfig,
          on_step: Optional[Callable[[TraceEntry], None]] = None) -> TrainResult:
    """Optimize ``model`` in place on random batches drawn from ``corpus``.

    Only parameters with ``requires_grad`` set are updated, so an adapted model
    trains its adapters alone. A non-finite loss aborts with the parameters
    that produced the last finite one.
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpusError('cannot train on an empty corpus')
    if train_cfg.batch_size > len(corpus):
        raise ContractError(f'batch size {train_cfg.batch_size} exceeds corpus size {len(corpus)}')

    rng = substream(train_cfg.seed, 'batching')
    optimizer = Adam(model.trainable_parameters(), lr=train_cfg.learning_rate,
                     beta1=train_cfg.beta1, beta2=train_cfg.beta2, eps=train_cfg.eps)
    last_good = snapshot(model)
    trace: List[TraceEntry] = []
    logger.info('training %d parameters for %d steps, batch size %d',
                sum(p.size for p in optimizer.params.values()), train_cfg.steps,
                train_cfg.batch_size)

    for step in range(train_cfg.steps):
        index = rng.choice(len(corpus), size=train_cfg.batch_size, replace=False)
        losses = step_losses([corpus[i] for i in index], model, loss_cfg)
        value = losses.total.item()
        if not math.isfinite(value):
            raise TrainingDivergedError(step, value, last_good)
        last_good = snapshot(model)

        optimizer.zero_grad()
        losses.total.backward()
        optimizer.step()

        entry = TraceEntry(step, value, losses.l1.item(),
                           losses.l2.item() if losses.l2 is not None else 0.0)
        trace.append(entry)
        if on_step is not None:
            on_step(entry)
        if step % train_cfg.log_every == 0 or step == train_cfg.steps - 1:
            logger.info('step %d loss %.4f (l1 %.4f, l2 %.4f)', step, entry.loss, entry.l1, entry.l2)
    return TrainResult(model, trace)


##########################################################
# Loss trace file
##########################################################
def write_loss_trace(trace: Sequence[TraceEntry], path: Union[str, Path]) -> Path:
    """Two whitespace-separated columns: step and total loss."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='\n') as fh:
        fh.write('# step loss\n')
        for entry in trace:
            fh.write(f'{entry.step} {entry.loss!r}\n')
    return path


def read_loss_trace(path: Union[str, Path]) -> List[Tuple[int, float]]:
    rows = []
    with Path(path).open('r', encoding='utf-8') as fh:
        for line in fh:
            if not line.strip() or line.startswith('#'):
                continue
            step, loss = line.split()
            rows.append((int(step), float(loss)))
    return rows
