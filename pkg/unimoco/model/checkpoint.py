########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Single-file checkpoints.

The file is a numpy ``.npz`` archive. The entry ``__meta__`` holds a JSON
document with keys ``model`` (ModelConfig), ``padding`` (PaddingConfig) and
``adapter`` (AdapterConfig or null). Every other entry is a parameter tensor
named by its dotted module path, e.g. ``backbone.blocks.0.qkv.weight`` or
``backbone.blocks.0.qkv.adapter.lora_a``.
"""

import json
import logging
import zipfile
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np

from unimoco.exceptions import CheckpointError
from unimoco.model.config import ModelConfig, PaddingConfig
from unimoco.model.core import UniMoCoModel


logger = logging.getLogger(__name__)

META_KEY = '__meta__'


def save_checkpoint(model: UniMoCoModel, path: Union[str, Path],
                    params: Optional[Mapping[str, np.ndarray]] = None) -> Path:
    """Write ``model`` (or an explicit parameter snapshot for it) to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    adapter = getattr(model, 'adapter_config', None)
    meta = {
        'model': model.cfg.model_dump(mode='json'),
        'padding': model.padding.model_dump(mode='json'),
        'adapter': adapter.model_dump(mode='json') if adapter is not None else None,
    }
    arrays: Dict[str, Any] = {
        name: np.asarray(value) for name, value in
        (params.items() if params is not None else
         ((n, p.data) for n, p in model.named_parameters()))
    }
    arrays[META_KEY] = np.array(json.dumps(meta, sort_keys=True))
    with path.open('wb') as fh:
        np.savez(fh, **arrays)
    logger.info('saved checkpoint with %d tensors to %s', len(arrays) - 1, path)
    return path


def load_checkpoint(path: Union[str, Path]) -> UniMoCoModel:
    from unimoco.training.adapters import AdapterConfig, apply_low_rank_adapters

    try:
        with np.load(Path(path), allow_pickle=False) as archive:
            meta = json.loads(str(archive[META_KEY]))
            arrays = {name: archive[name] for name in archive.files if name != META_KEY}
    except (OSError, ValueError, KeyError, zipfile.BadZipFile) as err:
        raise CheckpointError(f'cannot read checkpoint {path}: {err}') from err

    try:
        model = UniMoCoModel(ModelConfig.model_validate(meta['model']),
                             PaddingConfig.model_validate(meta['padding']))
        if meta.get('adapter') is not None:
            apply_low_rank_adapters(model, AdapterConfig.model_validate(meta['adapter']))
    except (KeyError, ValueError) as err:
        raise CheckpointError(f'invalid checkpoint metadata in {path}: {err}') from err

    params = model.parameters()
    missing = sorted(set(params) - set(arrays))
    unexpected = sorted(set(arrays) - set(params))
    if missing or unexpected:
        raise CheckpointError(f'checkpoint {path}: missing {missing}, unexpected {unexpected}')
    for name, tensor in params.items():
        if arrays[name].shape != tensor.shape:
            raise CheckpointError(
                f'checkpoint {path}: {name} has shape {arrays[name].shape}, model expects {tensor.shape}'
            )
        tensor.data = np.array(arrays[name], dtype=np.float64)
    return model
