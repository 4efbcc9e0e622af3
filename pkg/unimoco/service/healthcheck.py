########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import os

from fastapi import status, APIRouter
from pydantic import BaseModel

from unimoco import __version__
from unimoco.service.retrieval import CHECKPOINT_ENV

healthcheck_router = APIRouter()

class HealthCheck(BaseModel):
    status: str
    version: str
    checkpoint_configured: bool


@healthcheck_router.get(
    "/health",
    status_code=status.HTTP_200_OK,
    response_model=HealthCheck
)
def get_health() -> HealthCheck:
    # Liveness only; the checkpoint is loaded on the first embedding request.
    return HealthCheck(status='OK', version=__version__,
                       checkpoint_configured=bool(os.environ.get(CHECKPOINT_ENV)))
