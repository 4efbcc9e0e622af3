########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

from unimoco.model.config import BaselineMode, ModelConfig, PaddingConfig, PaddingMode
from unimoco.model.core import (
    PSEUDO,
    REAL,
    Embedding,
    UniMoCoModel,
    VisualTokens,
    build_model,
    check_compatible,
    drop_image,
    pad_prompt,
)
from unimoco.model.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    'BaselineMode', 'ModelConfig', 'PaddingConfig', 'PaddingMode', 'PSEUDO', 'REAL', 'Embedding',
    'UniMoCoModel', 'VisualTokens', 'build_model', 'check_compatible', 'drop_image', 'pad_prompt',
    'load_checkpoint', 'save_checkpoint',
]
