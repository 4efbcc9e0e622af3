########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import enum
import math
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# Instruction vocabulary: one token per task tag followed by one role token.
INSTRUCTION_TOKENS = 6
ROLE_TOKENS = {'query': 4, 'target': 5}

PatchGrid = List[List[float]]


class ModalityCombo(str, enum.Enum):
    TI_T = 'TI_T'
    T_TI = 'T_TI'
    TI_TI = 'TI_TI'

    @property
    def query_has_image(self) -> bool:
        return self in (ModalityCombo.TI_T, ModalityCombo.TI_TI)

    @property
    def target_has_image(self) -> bool:
        return self in (ModalityCombo.T_TI, ModalityCombo.TI_TI)

    @property
    def label(self) -> str:
        return {'TI_T': '(T+I,T)', 'T_TI': '(T,T+I)', 'TI_TI': '(T+I,T+I)'}[self.value]


class TaskTag(str, enum.Enum):
    CLASSIFICATION = 'classification'
    RETRIEVAL = 'retrieval'
    VQA = 'vqa'
    GROUNDING = 'grounding'

    @property
    def token(self) -> int:
        return list(TaskTag).index(self)


class Split(str, enum.Enum):
    IND = 'IND'
    OOD = 'OOD'


class ModalInput(BaseModel):
    """Instruction tokens, content tokens and an optional P x D_in patch grid."""

    model_config = ConfigDict(frozen=True)

    instruction: List[int]
    content: List[int]
    image: Optional[PatchGrid] = None

    @field_validator('instruction', 'content')
    @classmethod
    def check_tokens(cls, tokens: List[int]) -> List[int]:
        if any(t < 0 for t in tokens):
            raise ValueError('token ids must be non-negative')
        return tokens

    @field_validator('image')
    @classmethod
    def check_image(cls, image: Optional[PatchGrid]) -> Optional[PatchGrid]:
        if image is None:
            return image
        if not image or len({len(row) for row in image}) != 1 or not image[0]:
            raise ValueError('image must be a non-empty rectangular patch grid')
        if not all(math.isfinite(v) for row in image for v in row):
            raise ValueError('image values must be finite')
        return image

    @property
    def has_image(self) -> bool:
        return self.image is not None

    def patches(self) -> np.ndarray:
        return np.asarray(self.image, dtype=np.float64)

    def tokens(self) -> List[int]:
        return self.instruction + self.content


class PairRecord(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    query: ModalInput
    positive_target: ModalInput = Field(alias='target')
    combo: ModalityCombo
    task_tag: TaskTag
    split: Split
    class_id: int = Field(ge=0)

    @model_validator(mode='after')
    def check_image_presence(self) -> 'PairRecord':
        if self.query.has_image != self.combo.query_has_image:
            raise ValueError(f'query image presence does not match combo {self.combo.value}')
        if self.positive_target.has_image != self.combo.target_has_image:
            raise ValueError(f'target image presence does not match combo {self.combo.value}')
        return self


class CorpusSpec(BaseModel):
    model_config = ConfigDict(extra='forbid')

    seed: int
    # Sampling substream; prototypes always come from 'prototypes' so a
    # training and an evaluation corpus of one seed share their classes.
    stream: str = 'corpus'
    vocab_size: int = 64
    P: int = Field(default=8, ge=1)
    D_in: int = Field(default=16, ge=1)
    n_classes: int = Field(default=32, ge=1)
    n_ood_classes: int = Field(default=8, ge=0)
    counts: Dict[ModalityCombo, int]
    ood_fraction: float = Field(default=0.0, ge=0.0, le=1.0)
    task_mix: Dict[TaskTag, float] = Field(default_factory=lambda: {tag: 1.0 for tag in TaskTag})
    sigma: float = Field(default=0.5, ge=0.0)
    token_noise: float = Field(default=0.1, ge=0.0, le=1.0)
    content_length: int = Field(default=2, ge=1)

    @field_validator('counts')
    @classmethod
    def check_counts(cls, counts: Dict[ModalityCombo, int]) -> Dict[ModalityCombo, int]:
        if any(v < 0 for v in counts.values()):
            raise ValueError('per-combo counts must be >= 0')
        return {combo: counts.get(combo, 0) for combo in ModalityCombo}

    @field_validator('task_mix')
    @classmethod
    def check_task_mix(cls, mix: Dict[TaskTag, float]) -> Dict[TaskTag, float]:
        if any(w < 0 for w in mix.values()) or sum(mix.values()) <= 0:
            raise ValueError('task weights must be >= 0 with a positive sum')
        return mix

    @model_validator(mode='after')
    def check_vocab(self) -> 'CorpusSpec':
        if self.content_vocab < self.n_classes + self.n_ood_classes:
            raise ValueError(
                f'vocab_size {self.vocab_size} leaves {self.content_vocab} content tokens for '
                f'{self.n_classes + self.n_ood_classes} classes'
            )
        if self.ood_fraction > 0 and self.n_ood_classes == 0:
            raise ValueError('ood_fraction > 0 needs n_ood_classes >= 1')
        return self

    @property
    def content_vocab(self) -> int:
        return self.vocab_size - INSTRUCTION_TOKENS

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def ind_classes(self) -> List[int]:
        return list(range(self.n_classes))

    @property
    def ood_classes(self) -> List[int]:
        return list(range(self.n_classes, self.n_classes + self.n_ood_classes))
