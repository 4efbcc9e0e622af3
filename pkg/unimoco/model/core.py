########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Multi-modal embedding model with a modality-completion module.

Inputs that carry an image are encoded by the vision encoder and projector.
Text-only inputs are routed through the completion module instead: the content
is padded to the visual token count, run through a small causal language model,
and its last-layer hidden states are re-encoded by an auxiliary vision encoder
into pseudo visual tokens of the same shape. Either way the visual tokens are
prepended to the instruction and content tokens, and the backbone's final
hidden state, L2-normalized, is the embedding.
"""

import logging
from collections import OrderedDict
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from unimoco.corpus.types import ModalInput
from unimoco.exceptions import ContractError, DimensionError, PaddingOverflowError
from unimoco.model.config import BaselineMode, ModelConfig, PaddingConfig, PaddingMode
from unimoco.model.layers import Linear, Module, TokenEmbedding, Transformer
from unimoco.numerics import Tensor, concat, gelu, l2_normalize, matmul, take
from unimoco.seeding import substream


logger = logging.getLogger(__name__)

REAL = 'real'
PSEUDO = 'pseudo'

# Unit-norm d-vector produced by UniMoCoModel.embed.
Embedding = Tensor


class VisualTokens(NamedTuple):
    tokens: Tensor
    provenance: str


def pad_prompt(content: Sequence[int], cfg: PaddingConfig) -> List[int]:
    """P_pad || content || [END] || N dummies, exactly ``cfg.target_length`` long."""
    n_dummy = cfg.target_length - len(cfg.pad_prompt) - len(content) - 1
    if n_dummy < 0:
        raise PaddingOverflowError(len(content), cfg.max_content_length)
    return list(cfg.pad_prompt) + list(content) + [cfg.end_token] + [cfg.dummy_token] * n_dummy


def drop_image(item: ModalInput) -> ModalInput:
    if item.image is None:
        return item
    return item.model_copy(update={'image': None})


class VisionEncoder(Module):
    """Token-wise input projection, bidirectional transformer, optional pooling.

    With ``pool_to`` set and different from ``n_tokens``, a learned
    (pool_to x n_tokens) matrix mixes the token axis.
    """

    def __init__(self, in_features: int, cfg: ModelConfig, n_layers: int, n_tokens: int,
                 pool_to: Optional[int], rng: np.random.Generator) -> None:
        self.patch_embed = Linear(in_features, cfg.d_model, rng)
        self.encoder = Transformer(cfg.d_model, n_layers, cfg.n_heads, cfg.mlp_ratio, n_tokens,
                                   causal=False, rng=rng)
        self.pool = None
        if pool_to is not None and pool_to != n_tokens:
            init = np.full((pool_to, n_tokens), 1.0 / n_tokens)
            self.pool = Tensor(init + rng.standard_normal(init.shape) * 0.1 / n_tokens,
                               requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        hidden = self.encoder(self.patch_embed(x))
        if self.pool is not None:
            hidden = matmul(self.pool, hidden)
        return hidden


class Projector(Module):

    def __init__(self, d: int, rng: np.random.Generator) -> None:
        self.fc_in = Linear(d, d, rng)
        self.fc_out = Linear(d, d, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc_out(gelu(self.fc_in(x)))


class CompletionModule(Module):
    """Text-to-visual-token language model plus the auxiliary vision encoder."""

    def __init__(self, cfg: ModelConfig) -> None:
        rng = substream(cfg.seed, 'init/t2i')
        self.tokens = TokenEmbedding(cfg.t2i_vocab_size, cfg.d_model, rng)
        self.lm = Transformer(cfg.d_model, cfg.t2i_layers, cfg.n_heads, cfg.mlp_ratio,
                              cfg.max_seq_len, causal=True, rng=rng)
        self.aux_encoder = None
        if cfg.aux_encoder:
            self.aux_encoder = VisionEncoder(cfg.d_model, cfg, cfg.aux_layers, cfg.max_seq_len,
                                             pool_to=None, rng=substream(cfg.seed, 'init/aux'))

    def __call__(self, ids: np.ndarray) -> Tensor:
        hidden = self.lm(self.tokens(ids))
        if self.aux_encoder is not None:
            hidden = self.aux_encoder(hidden)
        return hidden


class UniMoCoModel(Module):

    def __init__(self, cfg: ModelConfig, padding: Optional[PaddingConfig] = None) -> None:
        self.cfg = cfg
        self.padding = padding or PaddingConfig.for_model(cfg)
        self.vision = VisionEncoder(cfg.D_in, cfg, cfg.vision_layers, cfg.P, pool_to=cfg.V,
                                    rng=substream(cfg.seed, 'init/vision'))
        self.projector = Projector(cfg.d_model, substream(cfg.seed, 'init/projector'))
        backbone_rng = substream(cfg.seed, 'init/backbone')
        self.token_embedding = TokenEmbedding(cfg.vocab_size, cfg.d_model, backbone_rng)
        self.backbone = Transformer(cfg.d_model, cfg.n_layers, cfg.n_heads, cfg.mlp_ratio,
                                    cfg.max_seq_len, causal=True, rng=backbone_rng)
        self.completion = CompletionModule(cfg) if cfg.completion else None
        self.adapter_config = None

    ##########################################################
    # Visual token sources
    ##########################################################
    def encode_images(self, patches: np.ndarray) -> Tensor:
        """(N, P, D_in) patch grids to (N, V, d_model) real visual tokens."""
        expected = (self.cfg.P, self.cfg.D_in)
        if patches.ndim != 3 or patches.shape[1:] != expected:
            raise DimensionError(f'patch grid shape {patches.shape[1:]} does not match {expected}')
        return self.projector(self.vision(Tensor(patches)))

    def encode_image(self, patches: np.ndarray) -> VisualTokens:
        tokens = self.encode_images(np.asarray(patches, dtype=np.float64)[None])
        return VisualTokens(tokens[0], REAL)

    def completion_input(self, content: Sequence[int]) -> List[int]:
        if self.cfg.padding is PaddingMode.NONE:
            return list(content)
        return pad_prompt(content, self.padding)

    def complete_modalities(self, contents: Sequence[Sequence[int]]) -> Tensor:
        """Equal-length content batches to (N, L, d_model) pseudo visual tokens."""
        if self.completion is None:
            raise ContractError('completion module is disabled in this configuration')
        ids = np.array([self.completion_input(c) for c in contents], dtype=np.int64)
        tokens = self.completion(ids)
        if self.cfg.pseudo_through_projector:
            tokens = self.projector(tokens)
        return tokens

    def complete_modality(self, content: Sequence[int]) -> VisualTokens:
        return VisualTokens(self.complete_modalities([content])[0], PSEUDO)

    ##########################################################
    # Routing
    ##########################################################
    def route(self, item: ModalInput) -> Tuple[str, int]:
        """(route name, visual token count) for one input."""
        if item.has_image:
            return REAL, self.cfg.V
        if self.completion is not None:
            return PSEUDO, len(self.completion_input(item.content))
        if self.cfg.baseline_mode is BaselineMode.ZERO_FILL:
            return 'zero', self.cfg.V
        return 'none', 0

    def _visual_tokens(self, route: str, items: Sequence[ModalInput]) -> Optional[Tensor]:
        if route == REAL:
            return self.encode_images(np.stack([item.patches() for item in items]))
        if route == PSEUDO:
            return self.complete_modalities([item.content for item in items])
        if route == 'zero':
            return Tensor(np.zeros((len(items), self.cfg.V, self.cfg.d_model)))
        return None

    def embed_batch(self, items: Sequence[ModalInput]) -> Tensor:
        """(N, d_model) unit-norm embeddings, one row per input in input order.

        Inputs are grouped by route and sequence length and each group runs as
        one batch; attention never crosses items.
        """
        groups: Dict[Tuple[str, int, int], List[int]] = OrderedDict()
        for i, item in enumerate(items):
            route, n_visual = self.route(item)
            groups.setdefault((route, n_visual, len(item.tokens())), []).append(i)

        finals, order = [], []
        for (route, _, _), index in groups.items():
            batch = [items[i] for i in index]
            text = self.token_embedding(np.array([item.tokens() for item in batch], dtype=np.int64))
            visual = self._visual_tokens(route, batch)
            sequence = text if visual is None else concat([visual, text], axis=1)
            finals.append(self.backbone(sequence)[:, -1, :])
            order.extend(index)

        stacked = finals[0] if len(finals) == 1 else concat(finals, axis=0)
        if order != sorted(order):
            stacked = take(stacked, np.argsort(order))
        return l2_normalize(stacked)

    def embed(self, item: ModalInput) -> Embedding:
        return self.embed_batch([item])[0]


def build_model(cfg: ModelConfig, padding: Optional[PaddingConfig] = None) -> UniMoCoModel:
    model = UniMoCoModel(cfg, padding)
    logger.debug('built model with %d parameters',
                 sum(p.size for p in model.parameters().values()))
    return model


def check_compatible(cfg: ModelConfig, items: Iterable[ModalInput]) -> None:
    """Fail fast when inputs were generated for a different model shape."""
    expected = (cfg.P, cfg.D_in)
    for item in items:
        top = max(item.tokens(), default=-1)
        if top >= cfg.vocab_size:
            raise DimensionError(f'token id {top} needs a vocabulary larger than the '
                                 f'model vocab_size {cfg.vocab_size}')
        if item.has_image and item.patches().shape != expected:
            raise DimensionError(f'patch grid shape {item.patches().shape} does not match '
                                 f'model (P, D_in) {expected}')
