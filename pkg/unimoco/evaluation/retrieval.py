########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Similarity matching against a fixed pool of candidate embeddings."""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Protocol, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from unimoco.corpus.types import ModalInput
from unimoco.exceptions import ContractError
from unimoco.numerics import Tensor, no_grad


UNIT_NORM_ATOL = 1e-5
DEFAULT_CHUNK = 128


class Embedder(Protocol):
    def embed_batch(self, items: Sequence[ModalInput]) -> Tensor: ...


class CandidateIndex(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    embeddings: np.ndarray
    ids: List[int]

    @model_validator(mode='after')
    def check_rows(self) -> 'CandidateIndex':
        if self.embeddings.ndim != 2 or self.embeddings.shape[0] != len(self.ids):
            raise ValueError(f'{self.embeddings.shape} embedding matrix for {len(self.ids)} ids')
        if not self.ids:
            raise ValueError('candidate index is empty')
        norms = np.linalg.norm(self.embeddings, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_ATOL):
            raise ValueError('candidate rows must be unit-norm')
        return self

    def __len__(self) -> int:
        return len(self.ids)

    def scores(self, queries: np.ndarray) -> np.ndarray:
        """Cosine similarity of each query row with every candidate."""
        return np.atleast_2d(queries) @ self.embeddings.T

    def best(self, queries: np.ndarray) -> List[int]:
        # np.argmax keeps the first maximum: ties go to the lowest position.
        return [self.ids[i] for i in np.argmax(self.scores(queries), axis=1)]


def embed_inputs(model: Embedder, items: Sequence[ModalInput], workers: int = 1,
                 chunk_size: int = DEFAULT_CHUNK) -> np.ndarray:
    """Inference-only (n, d) embeddings, computed in chunks, in input order."""
    chunks = [items[i:i + chunk_size] for i in range(0, len(items), chunk_size)]

    def run(chunk: Sequence[ModalInput]) -> np.ndarray:
        with no_grad():
            return model.embed_batch(chunk).data

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(chunk) for chunk in chunks]
    return np.concatenate(parts, axis=0)


def build_index(targets: Sequence[ModalInput], model: Embedder,
                ids: Optional[Sequence[int]] = None, workers: int = 1) -> CandidateIndex:
    if not targets:
        raise ContractError('build_index: no targets')
    ids = list(range(len(targets))) if ids is None else list(ids)
    return CandidateIndex(embeddings=embed_inputs(model, targets, workers), ids=ids)


def match(query: ModalInput, index: CandidateIndex, model: Embedder) -> int:
    return index.best(embed_inputs(model, [query]))[0]


def precision_at_1(predictions: Sequence[int], gold: Sequence[int]) -> float:
    if len(predictions) != len(gold):
        raise ContractError(f'precision_at_1: {len(predictions)} predictions for {len(gold)} gold ids')
    if not predictions:
        raise ContractError('precision_at_1: nothing to score')
    return float(np.mean([p == g for p, g in zip(predictions, gold)]))
