########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PaddingMode(str, enum.Enum):
    FULL = 'full'
    HALF = 'half'
    NONE = 'none'


class BaselineMode(str, enum.Enum):
    # What the conventional architecture sees when an image is missing.
    ZERO_FILL = 'zero_fill'
    TEXT_ONLY = 'text_only'


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    d_model: int = Field(default=32, ge=1)
    n_layers: int = Field(default=2, ge=1)
    n_heads: int = Field(default=4, ge=1)
    vision_layers: int = Field(default=1, ge=1)
    t2i_layers: int = Field(default=2, ge=1)
    aux_layers: int = Field(default=1, ge=1)
    mlp_ratio: int = Field(default=2, ge=1)
    vocab_size: int = Field(default=64, ge=1)
    V: int = 8
    P: int = Field(default=8, ge=1)
    D_in: int = Field(default=16, ge=1)
    max_seq_len: int = Field(default=64, ge=2)
    pad_prompt_length: int = Field(default=1, ge=1)
    seed: int = 0

    completion: bool = True
    aux_encoder: bool = True
    padding: PaddingMode = PaddingMode.FULL
    baseline_mode: BaselineMode = BaselineMode.ZERO_FILL
    pseudo_through_projector: bool = False

    @model_validator(mode='after')
    def check_shapes(self) -> 'ModelConfig':
        if self.V < 2:
            raise ValueError(f'V must be >= 2, got {self.V}')
        if self.d_model % self.n_heads:
            raise ValueError(f'd_model {self.d_model} is not divisible by n_heads {self.n_heads}')
        if self.padding is PaddingMode.HALF and self.V % 2:
            raise ValueError(f'half padding needs an even V, got {self.V}')
        return self

    @property
    def t2i_vocab_size(self) -> int:
        # corpus vocab + padding prompt + [END] + dummy
        return self.vocab_size + self.pad_prompt_length + 2


class PaddingConfig(BaseModel):
    pad_prompt: List[int]
    end_token: int
    dummy_token: int
    target_length: int = Field(ge=1)

    @model_validator(mode='after')
    def check_reserved(self) -> 'PaddingConfig':
        reserved = self.pad_prompt + [self.end_token, self.dummy_token]
        if len(set(reserved)) != len(reserved):
            raise ValueError('padding prompt, [END] and dummy token ids must be distinct')
        return self

    @classmethod
    def for_model(cls, cfg: ModelConfig) -> 'PaddingConfig':
        """Reserved ids sit directly above the corpus vocabulary."""
        base = cfg.vocab_size
        return cls(
            pad_prompt=list(range(base, base + cfg.pad_prompt_length)),
            end_token=base + cfg.pad_prompt_length,
            dummy_token=base + cfg.pad_prompt_length + 1,
            target_length=cfg.V // 2 if cfg.padding is PaddingMode.HALF else cfg.V,
        )

    @property
    def max_content_length(self) -> int:
        return self.target_length - len(self.pad_prompt) - 1
