########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

from fastapi import FastAPI

from unimoco.service.healthcheck import healthcheck_router
from unimoco.service.retrieval import retrieval_router


app = FastAPI(title='unimoco')

app.include_router(router=healthcheck_router, prefix='/api')
app.include_router(router=retrieval_router, prefix='/api')
