########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

from unimoco.training.losses import (
    AuxDistance,
    LossConfig,
    alignment_distance,
    aux_loss,
    composite_loss,
    info_nce,
)
from unimoco.training.adapters import AdapterConfig, LowRankAdapter, apply_low_rank_adapters
from unimoco.training.optim import Adam
from unimoco.training.trainer import (
    TraceEntry,
    TrainConfig,
    TrainResult,
    read_loss_trace,
    step_losses,
    train,
    write_loss_trace,
)

__all__ = [
    'AuxDistance', 'LossConfig', 'alignment_distance', 'aux_loss', 'composite_loss', 'info_nce',
    'AdapterConfig', 'LowRankAdapter', 'apply_low_rank_adapters', 'Adam',
    'TraceEntry', 'TrainConfig', 'TrainResult', 'read_loss_trace', 'step_losses', 'train',
    'write_loss_trace',
]
