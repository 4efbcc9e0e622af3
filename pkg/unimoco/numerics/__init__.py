########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

from unimoco.numerics.tensor import ComputeGraph, Tensor, as_tensor, is_grad_enabled, no_grad
from unimoco.numerics.functional import (
    attention,
    causal_self_attention,
    concat,
    cosine_similarity,
    embedding,
    gelu,
    l2_normalize,
    layer_norm,
    log_softmax,
    matmul,
    multi_head_attention,
    softmax,
    softmax_cross_entropy,
    take,
    tanh,
)
from unimoco.numerics.gradcheck import GradCheckReport, grad_check

__all__ = [
    'ComputeGraph', 'Tensor', 'as_tensor', 'is_grad_enabled', 'no_grad',
    'attention', 'causal_self_attention', 'concat', 'cosine_similarity', 'embedding', 'gelu',
    'l2_normalize', 'layer_norm', 'log_softmax', 'matmul', 'multi_head_attention', 'softmax',
    'softmax_cross_entropy', 'take', 'tanh', 'GradCheckReport', 'grad_check',
]
