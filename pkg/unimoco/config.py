########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Run configuration read from flat ``section.key = value`` files.

Example::

    corpus.seed = 7
    corpus.count.TI_T = 1700      # per-combo pair counts
    corpus.task.retrieval = 1.0   # task sampling weights
    padding.mode = half
    run.disable_aux_encoder = true

Values are parsed as JSON scalars when possible and kept as strings
otherwise. ``corpus.seed`` is the top-level seed; model, training and adapter
seeds default to it.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from unimoco.corpus.synth import balanced_counts
from unimoco.corpus.types import CorpusSpec, ModalityCombo
from unimoco.exceptions import ConfigError
from unimoco.model.config import ModelConfig, PaddingConfig, PaddingMode
from unimoco.training.adapters import AdapterConfig
from unimoco.training.losses import LossConfig
from unimoco.training.trainer import TrainConfig


logger = logging.getLogger(__name__)

SECTIONS = ('corpus', 'eval', 'model', 'padding', 'loss', 'adapter', 'train', 'run')
# padding.<key> -> model field
PADDING_KEYS = {'mode': 'padding', 'prompt_length': 'pad_prompt_length'}
CORPUS_SHAPE_KEYS = ('vocab_size', 'P', 'D_in')


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    counts: Dict[ModalityCombo, int] = Field(default_factory=lambda: balanced_counts(600))
    ood_fraction: float = Field(default=0.2, ge=0.0, le=1.0)
    workers: int = Field(default=1, ge=1)
    n_seeds: int = Field(default=3, ge=1)


class RunSettings(BaseModel):
    model_config = ConfigDict(extra='forbid')

    out_dir: str = 'runs/default'
    deterministic: bool = True
    # Ablation switches; disable_padding wins over half_padding.
    disable_completion: bool = False
    disable_aux_encoder: bool = False
    disable_padding: bool = False
    half_padding: bool = False
    alpha: Optional[float] = Field(default=None, ge=0.0)
    t2i_layers: Optional[int] = Field(default=None, ge=1)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    corpus: CorpusSpec
    eval: EvalConfig = Field(default_factory=EvalConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    adapter: AdapterConfig = Field(default_factory=AdapterConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    run: RunSettings = Field(default_factory=RunSettings)

    @property
    def seed(self) -> int:
        return self.corpus.seed

    @property
    def workers(self) -> int:
        return 1 if self.run.deterministic else self.eval.workers

    def model_for_run(self) -> ModelConfig:
        """The model config with every ablation switch applied."""
        update: Dict[str, Any] = {}
        if self.run.half_padding:
            update['padding'] = PaddingMode.HALF
        if self.run.disable_padding:
            update['padding'] = PaddingMode.NONE
        if self.run.disable_completion:
            update['completion'] = False
        if self.run.disable_aux_encoder:
            update['aux_encoder'] = False
        if self.run.t2i_layers is not None:
            update['t2i_layers'] = self.run.t2i_layers
        try:
            return ModelConfig.model_validate({**self.model.model_dump(), **update})
        except ValidationError as err:
            raise _config_error(err, prefix='model') from err

    def loss_for_run(self) -> LossConfig:
        if self.run.alpha is None:
            return self.loss
        return self.loss.model_copy(update={'alpha': self.run.alpha})

    def eval_spec(self) -> CorpusSpec:
        return self.corpus.model_copy(update={'stream': 'eval', 'counts': dict(self.eval.counts),
                                              'ood_fraction': self.eval.ood_fraction})

    def with_switches(self, **switches: Any) -> 'RunConfig':
        return self.model_copy(update={'run': self.run.model_copy(update=switches)})

    def with_seed(self, seed: int) -> 'RunConfig':
        return self.model_copy(update={
            'corpus': self.corpus.model_copy(update={'seed': seed}),
            'model': self.model.model_copy(update={'seed': seed}),
            'train': self.train.model_copy(update={'seed': seed}),
            'adapter': self.adapter.model_copy(update={'seed': seed}),
        })


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except ValueError:
        return text


def _config_error(err: ValidationError, prefix: str = '') -> ConfigError:
    first = err.errors()[0]
    loc = [str(part) for part in first['loc']]
    if loc[:2] == ['corpus', 'counts'] or loc[:2] == ['eval', 'counts']:
        loc = [loc[0], 'count'] + loc[2:]
        if first['type'] == 'missing':
            loc.append('*')
    if loc[:2] == ['corpus', 'task_mix']:
        loc = ['corpus', 'task'] + loc[2:]
    key = '.'.join(([prefix] if prefix else []) + loc) or None
    message = 'missing required key' if first['type'] == 'missing' else first['msg']
    return ConfigError(message, key=key)


def parse_config_text(text: str) -> Dict[str, Dict[str, Any]]:
    """Group ``section.key = value`` lines into one raw dict per section."""
    sections: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'line {line_number}: expected "section.key = value"')
        key, value = (part.strip() for part in line.split('=', 1))
        section, _, name = key.partition('.')
        if section not in sections or not name:
            raise ConfigError('unknown key', key=key)

        target, field = sections[section], name
        if section in ('corpus', 'eval') and name.startswith('count.'):
            target, field = target.setdefault('counts', {}), name[len('count.'):]
        elif section == 'corpus' and name.startswith('task.'):
            target, field = target.setdefault('task_mix', {}), name[len('task.'):]
        elif '.' in name:
            raise ConfigError('unknown key', key=key)
        if field in target:
            raise ConfigError('key given twice', key=key)
        target[field] = _parse_value(value)
    return sections


def build_run_config(sections: Dict[str, Dict[str, Any]],
                     seed_override: Optional[int] = None) -> RunConfig:
    sections = {name: dict(values) for name, values in sections.items()}
    corpus, model = sections['corpus'], sections['model']
    if seed_override is not None:
        corpus['seed'] = seed_override
        for name in ('model', 'train', 'adapter'):
            sections[name]['seed'] = seed_override
    if 'seed' not in corpus:
        raise ConfigError('missing required key', key='corpus.seed')
    if 'counts' not in corpus:
        raise ConfigError('missing required key', key='corpus.count.*')

    for name, value in sections.pop('padding').items():
        if name not in PADDING_KEYS:
            raise ConfigError('unknown key', key=f'padding.{name}')
        model[PADDING_KEYS[name]] = value
    for name in CORPUS_SHAPE_KEYS:
        if name in model:
            raise ConfigError(f'set by corpus.{name}', key=f'model.{name}')
        if name in corpus:
            model[name] = corpus[name]
    for name in ('model', 'train', 'adapter'):
        sections[name].setdefault('seed', corpus['seed'])

    try:
        cfg = RunConfig.model_validate(sections)
    except ValidationError as err:
        raise _config_error(err) from err
    if cfg.corpus.total == 0:
        raise ConfigError('every per-combo count is zero', key='corpus.count.*')

    model_cfg = cfg.model_for_run()
    if model_cfg.completion and model_cfg.padding is not PaddingMode.NONE:
        limit = PaddingConfig.for_model(model_cfg).max_content_length
        if cfg.corpus.content_length > limit:
            raise ConfigError(f'{cfg.corpus.content_length} exceeds the {model_cfg.padding.value} '
                              f'padding limit of {limit}', key='corpus.content_length')
    return cfg


def load_run_config(path: Union[str, Path], seed_override: Optional[int] = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as err:
        raise ConfigError(f'cannot read config {path}: {err.strerror}') from err
    cfg = build_run_config(parse_config_text(text), seed_override)
    logger.debug('loaded run config from %s (seed %d)', path, cfg.seed)
    return cfg
