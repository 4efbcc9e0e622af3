########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import functools
import logging
import os
from typing import List

from fastapi import APIRouter, Depends, HTTPException, status
from pydantic import BaseModel

from unimoco.corpus.types import ModalInput
from unimoco.evaluation.retrieval import build_index, embed_inputs
from unimoco.exceptions import UniMoCoError
from unimoco.model import UniMoCoModel, check_compatible, load_checkpoint


logger = logging.getLogger(__name__)

retrieval_router = APIRouter()

CHECKPOINT_ENV = 'UNIMOCO_CHECKPOINT'


@functools.lru_cache(maxsize=1)
def get_model() -> UniMoCoModel:
    path = os.environ.get(CHECKPOINT_ENV)
    if not path:
        raise HTTPException(status_code=status.HTTP_503_SERVICE_UNAVAILABLE,
                            detail=f'{CHECKPOINT_ENV} is not set; no model to serve')
    logger.info('loading checkpoint %s', path)
    try:
        return load_checkpoint(path)
    except UniMoCoError as err:
        logger.error('cannot load checkpoint %s: %s', path, err)
        raise HTTPException(status_code=status.HTTP_503_SERVICE_UNAVAILABLE,
                            detail=str(err)) from err


class EmbedResponse(BaseModel):
    embedding: List[float]


class MatchRequest(BaseModel):
    query: ModalInput
    candidates: List[ModalInput]


class MatchResponse(BaseModel):
    best: int
    scores: List[float]


def _unprocessable(err: UniMoCoError) -> HTTPException:
    return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(err))


@retrieval_router.post("/embed", response_model=EmbedResponse)
def create_embedding(item: ModalInput, model: UniMoCoModel = Depends(get_model)) -> EmbedResponse:
    try:
        check_compatible(model.cfg, [item])
        vector = embed_inputs(model, [item])[0]
    except UniMoCoError as err:
        raise _unprocessable(err) from err
    return EmbedResponse(embedding=vector.tolist())


@retrieval_router.post("/match", response_model=MatchResponse)
def match_candidates(request: MatchRequest,
                     model: UniMoCoModel = Depends(get_model)) -> MatchResponse:
    try:
        check_compatible(model.cfg, [request.query, *request.candidates])
        index = build_index(request.candidates, model)
        query = embed_inputs(model, [request.query])
    except UniMoCoError as err:
        raise _unprocessable(err) from err
    return MatchResponse(best=index.best(query)[0], scores=index.scores(query)[0].tolist())
