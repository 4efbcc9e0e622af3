########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from unimoco.exceptions import DimensionError
from unimoco.numerics import Tensor, embedding, gelu, layer_norm, matmul, multi_head_attention


class Module:
    """Parameter container; every Tensor attribute is a trainable parameter."""

    def named_parameters(self, prefix: str = '') -> Iterator[Tuple[str, Tensor]]:
        for name, value in vars(self).items():
            path = f'{prefix}{name}'
            if isinstance(value, Tensor):
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f'{path}.')
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f'{path}.{i}.')

    def named_modules(self, prefix: str = '') -> Iterator[Tuple[str, 'Module']]:
        yield prefix.rstrip('.'), self
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield from value.named_modules(f'{prefix}{name}.')
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_modules(f'{prefix}{name}.{i}.')

    def parameters(self) -> Dict[str, Tensor]:
        return dict(self.named_parameters())

    def trainable_parameters(self) -> Dict[str, Tensor]:
        return {name: p for name, p in self.named_parameters() if p.requires_grad}

    def zero_grad(self) -> None:
        for _, p in self.named_parameters():
            p.zero_grad()


def _param(values: np.ndarray) -> Tensor:
    return Tensor(values, requires_grad=True)


class Linear(Module):
    """y = x W^T + b with W stored out-by-in; an attached adapter adds its delta."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator) -> None:
        self.weight = _param(rng.standard_normal((out_features, in_features)) / np.sqrt(in_features))
        self.bias = _param(np.zeros(out_features))
        self.adapter: Optional[Callable[[Tensor], Tensor]] = None

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        out = matmul(x, self.weight.T) + self.bias
        if self.adapter is not None:
            out = out + self.adapter(x)
        return out


class LayerNorm(Module):

    def __init__(self, d: int) -> None:
        self.gamma = _param(np.ones(d))
        self.beta = _param(np.zeros(d))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta)


class TransformerBlock(Module):
    """Pre-norm block: self-attention then a GELU MLP, both residual."""

    def __init__(self, d: int, n_heads: int, mlp_ratio: int, causal: bool,
                 rng: np.random.Generator) -> None:
        self.n_heads = n_heads
        self.causal = causal
        self.ln_attn = LayerNorm(d)
        self.qkv = Linear(d, 3 * d, rng)
        self.proj = Linear(d, d, rng)
        self.ln_mlp = LayerNorm(d)
        self.fc_in = Linear(d, mlp_ratio * d, rng)
        self.fc_out = Linear(mlp_ratio * d, d, rng)

    def __call__(self, x: Tensor) -> Tensor:
        x = x + self.proj(multi_head_attention(self.qkv(self.ln_attn(x)), self.n_heads, self.causal))
        return x + self.fc_out(gelu(self.fc_in(self.ln_mlp(x))))


class Transformer(Module):
    """Learned positions, a stack of blocks and a final layer norm over (N, L, d)."""

    def __init__(self, d: int, n_layers: int, n_heads: int, mlp_ratio: int, max_len: int,
                 causal: bool, rng: np.random.Generator) -> None:
        self.position = _param(rng.standard_normal((max_len, d)) * 0.1)
        self.blocks: List[TransformerBlock] = [
            TransformerBlock(d, n_heads, mlp_ratio, causal, rng) for _ in range(n_layers)
        ]
        self.ln_final = LayerNorm(d)

    @property
    def max_len(self) -> int:
        return self.position.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        length = x.shape[1]
        if length > self.max_len:
            raise DimensionError(f'sequence length {length} exceeds max_seq_len {self.max_len}')
        x = x + self.position[:length]
        for block in self.blocks:
            x = block(x)
        return self.ln_final(x)


class TokenEmbedding(Module):

    def __init__(self, vocab_size: int, d: int, rng: np.random.Generator) -> None:
        self.table = _param(rng.standard_normal((vocab_size, d)))

    @property
    def vocab_size(self) -> int:
        return self.table.shape[0]

    def __call__(self, ids: np.ndarray) -> Tensor:
        return embedding(self.table, ids)
