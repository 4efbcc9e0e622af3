########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import math
from typing import Optional, Sequence

import numpy as np

from unimoco.exceptions import ContractError, DegenerateInputError, DimensionError
from unimoco.numerics.tensor import Tensor, as_tensor


GELU_COEFF = math.sqrt(2.0 / math.pi)
MASK_VALUE = -1e9


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product over the last two axes with broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f'matmul: incompatible shapes {a.shape} and {b.shape}')

    def backward(g: np.ndarray) -> None:
        a.accumulate(g @ np.swapaxes(b.data, -1, -2))
        b.accumulate(np.swapaxes(a.data, -1, -2) @ g)

    return Tensor.from_op(a.data @ b.data, (a, b), backward, 'matmul')


def gelu(x: Tensor) -> Tensor:
    """Tanh approximation of GELU."""
    inner = GELU_COEFF * (x.data + 0.044715 * x.data ** 3)
    t = np.tanh(inner)
    out = 0.5 * x.data * (1.0 + t)

    def backward(g: np.ndarray) -> None:
        d_inner = GELU_COEFF * (1.0 + 3 * 0.044715 * x.data ** 2)
        x.accumulate(g * (0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t ** 2) * d_inner))

    return Tensor.from_op(out, (x,), backward, 'gelu')


def tanh(x: Tensor) -> Tensor:
    return x.tanh()


def _softmax(data: np.ndarray) -> np.ndarray:
    shifted = data - data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, stabilized by max-subtraction."""
    out = _softmax(x.data)

    def backward(g: np.ndarray) -> None:
        x.accumulate(out * (g - (g * out).sum(axis=-1, keepdims=True)))

    return Tensor.from_op(out, (x,), backward, 'softmax')


def log_softmax(x: Tensor) -> Tensor:
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def backward(g: np.ndarray) -> None:
        x.accumulate(g - np.exp(out) * g.sum(axis=-1, keepdims=True))

    return Tensor.from_op(out, (x,), backward, 'log_softmax')


def softmax_cross_entropy(logits: Tensor, target_dist: Tensor, atol: float = 1e-9) -> Tensor:
    """H(target, softmax(logits)) over the last axis.

    A 1-D input yields a scalar; leading axes are kept as a batch.
    """
    logits, target_dist = as_tensor(logits), as_tensor(target_dist)
    if logits.shape != target_dist.shape:
        raise DimensionError(
            f'softmax_cross_entropy: logits {logits.shape} and target {target_dist.shape} differ'
        )
    if np.any(target_dist.data < 0) or np.any(np.abs(target_dist.data.sum(axis=-1) - 1.0) > atol):
        raise ContractError('softmax_cross_entropy: target distribution is not normalized')
    return -(target_dist * log_softmax(logits)).sum(axis=-1)


def l2_normalize(x: Tensor) -> Tensor:
    """Scale every row (last axis) to unit Euclidean norm."""
    norm = np.sqrt((x.data ** 2).sum(axis=-1, keepdims=True))
    if np.any(norm == 0.0):
        raise DegenerateInputError('l2_normalize: zero-norm input')
    out = x.data / norm

    def backward(g: np.ndarray) -> None:
        x.accumulate((g - out * (g * out).sum(axis=-1, keepdims=True)) / norm)

    return Tensor.from_op(out, (x,), backward, 'l2_normalize')


def cosine_similarity(a: Tensor, b: Tensor) -> Tensor:
    """Plain cosine of the angle between two vectors; no temperature."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f'cosine_similarity: shapes {a.shape} and {b.shape} differ')
    if np.linalg.norm(a.data) == 0.0 or np.linalg.norm(b.data) == 0.0:
        raise DegenerateInputError('cosine_similarity: zero-norm input')
    return (l2_normalize(a) * l2_normalize(b)).sum(axis=-1)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    x_hat = centered * inv_std
    out = x_hat * gamma.data + beta.data

    def backward(g: np.ndarray) -> None:
        gamma.accumulate(g * x_hat)
        beta.accumulate(g)
        d_hat = g * gamma.data
        x.accumulate(inv_std * (d_hat - d_hat.mean(axis=-1, keepdims=True)
                                - x_hat * (d_hat * x_hat).mean(axis=-1, keepdims=True)))

    return Tensor.from_op(out, (x, gamma, beta), backward, 'layer_norm')


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup ``table[ids]``; ids may have any integer shape."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError(f'embedding: ids outside [0, {table.shape[0]})')

    def backward(g: np.ndarray) -> None:
        full = np.zeros(table.shape)
        np.add.at(full, ids, g)
        table.accumulate(full)

    return Tensor.from_op(table.data[ids], (table,), backward, 'embedding')


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g: np.ndarray) -> None:
        for t, piece in zip(tensors, np.split(g, bounds, axis=axis)):
            t.accumulate(piece)

    return Tensor.from_op(np.concatenate([t.data for t in tensors], axis=axis), tensors,
                          backward, 'concat')


def take(x: Tensor, index: np.ndarray) -> Tensor:
    """Gather along the leading axis."""
    return x[np.asarray(index, dtype=np.int64)]


def causal_mask(length: int) -> np.ndarray:
    return np.triu(np.full((length, length), MASK_VALUE), k=1)


def attention(q: Tensor, k: Tensor, v: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """Scaled dot-product attention over (..., L, d_head) inputs."""
    scores = matmul(q, k.swap_last()) * (1.0 / math.sqrt(q.shape[-1]))
    if mask is not None:
        scores = scores + Tensor(mask)
    return matmul(softmax(scores), v)


def multi_head_attention(qkv: Tensor, n_heads: int, causal: bool = True) -> Tensor:
    """Split packed (N, L, 3d) projections into heads, attend, merge to (N, L, d)."""
    n, length, packed = qkv.shape
    d = packed // 3
    heads = qkv.reshape(n, length, 3, n_heads, d // n_heads).transpose(2, 0, 3, 1, 4)
    mixed = attention(heads[0], heads[1], heads[2], causal_mask(length) if causal else None)
    return mixed.transpose(0, 2, 1, 3).reshape(n, length, d)


def causal_self_attention(x: Tensor, w_qkv: Tensor, w_out: Tensor, n_heads: int,
                          causal: bool = True) -> Tensor:
    """Multi-head self-attention on (N, L, d) with packed projection weights.

    ``w_qkv`` is (3d, d) and ``w_out`` is (d, d), both in out-by-in layout.
    """
    return matmul(multi_head_attention(matmul(x, w_qkv.T), n_heads, causal), w_out.T)
