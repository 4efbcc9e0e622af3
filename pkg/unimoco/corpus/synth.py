########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Deterministic synthetic query/target pairs.

Each latent class owns a prototype patch grid and its own keyword tokens: two
when the content vocabulary holds two disjoint tokens per class, else one. No
two classes share a keyword. Images are the prototype plus Gaussian noise;
content tokens are the keywords with probability ``1 - token_noise`` and uniform
content tokens otherwise, so the class can be recovered from either modality and
text predicts image content.
"""

import logging
from collections import Counter
from typing import Dict, Iterator, List, Sequence, Union

import numpy as np

from unimoco.corpus.types import (
    INSTRUCTION_TOKENS,
    ROLE_TOKENS,
    CorpusSpec,
    ModalInput,
    ModalityCombo,
    PairRecord,
    Split,
    TaskTag,
)
from unimoco.exceptions import ContractError, EmptyCorpusError
from unimoco.numerics import Tensor, no_grad, softmax_cross_entropy
from unimoco.seeding import substream


logger = logging.getLogger(__name__)

RngState = Union[np.random.Generator, int]
MAX_KEYWORDS = 2


def instruction_for(task_tag: TaskTag, role: str = 'query') -> List[int]:
    return [task_tag.token, ROLE_TOKENS[role]]


class CorpusGenerator:

    def __init__(self, spec: CorpusSpec) -> None:
        self.spec = spec
        n_total = spec.n_classes + spec.n_ood_classes
        rng = substream(spec.seed, 'prototypes')
        self.prototypes = rng.standard_normal((n_total, spec.P, spec.D_in))
        per_class = min(MAX_KEYWORDS, spec.content_vocab // n_total)
        # Column j holds tokens [j * n_total, (j + 1) * n_total): disjoint by construction.
        self.keywords = np.stack(
            [np.arange(n_total) + j * n_total for j in range(per_class)], axis=1
        ) + INSTRUCTION_TOKENS
        if len(np.unique(self.keywords)) != self.keywords.size:
            raise ContractError('keyword sets of two classes overlap')

    def gen_item(self, class_id: int, rng_state: RngState, with_image: bool,
                 task_tag: TaskTag = TaskTag.RETRIEVAL, role: str = 'query') -> ModalInput:
        spec = self.spec
        if not 0 <= class_id < len(self.prototypes):
            raise ContractError(f'class_id {class_id} outside [0, {len(self.prototypes)})')
        rng = np.random.default_rng(rng_state) if isinstance(rng_state, int) else rng_state

        keyword_pick = rng.integers(0, self.keywords.shape[1], size=spec.content_length)
        noisy = rng.random(spec.content_length) < spec.token_noise
        filler = rng.integers(INSTRUCTION_TOKENS, spec.vocab_size, size=spec.content_length)
        content = np.where(noisy, filler, self.keywords[class_id][keyword_pick])

        image = None
        if with_image:
            noise = rng.standard_normal((spec.P, spec.D_in))
            image = (self.prototypes[class_id] + spec.sigma * noise).tolist()
        return ModalInput(instruction=instruction_for(task_tag, role),
                          content=[int(t) for t in content], image=image)

    def gen_corpus(self) -> Iterator[PairRecord]:
        spec = self.spec
        total = spec.total
        if total == 0:
            raise EmptyCorpusError('every per-combo count is zero')

        rng = substream(spec.seed, spec.stream)
        combos = [combo for combo in ModalityCombo for _ in range(spec.counts[combo])]
        order = rng.permutation(total)
        n_ood = int(round(total * spec.ood_fraction))
        is_ood = np.zeros(total, dtype=bool)
        is_ood[rng.choice(total, size=n_ood, replace=False)] = True
        tags = list(spec.task_mix)
        weights = np.array([spec.task_mix[tag] for tag in tags], dtype=np.float64)
        task_index = rng.choice(len(tags), size=total, p=weights / weights.sum())

        seen = {Split.IND: 0, Split.OOD: 0}
        for position in range(total):
            combo = combos[order[position]]
            split = Split.OOD if is_ood[position] else Split.IND
            pool = spec.ood_classes if split is Split.OOD else spec.ind_classes
            class_id = pool[seen[split] % len(pool)]
            seen[split] += 1
            task_tag = tags[task_index[position]]
            yield PairRecord(
                query=self.gen_item(class_id, rng, combo.query_has_image, task_tag, 'query'),
                target=self.gen_item(class_id, rng, combo.target_has_image, task_tag, 'target'),
                combo=combo,
                task_tag=task_tag,
                split=split,
                class_id=class_id,
            )


def gen_item(spec: CorpusSpec, class_id: int, rng_state: RngState, with_image: bool) -> ModalInput:
    return CorpusGenerator(spec).gen_item(class_id, rng_state, with_image)


def gen_corpus(spec: CorpusSpec) -> Iterator[PairRecord]:
    return CorpusGenerator(spec).gen_corpus()


def combo_tallies(records: Sequence[PairRecord]) -> Dict[ModalityCombo, int]:
    tally = Counter(r.combo for r in records)
    return {combo: tally.get(combo, 0) for combo in ModalityCombo}


def skewed_counts(total: int, dominant: ModalityCombo) -> Dict[ModalityCombo, int]:
    """Half of ``total`` for ``dominant``, a quarter for each other combo."""
    if total <= 0 or total % 4:
        raise ContractError(f'skewed corpus total {total} must be a positive multiple of 4')
    return {combo: total // 2 if combo is dominant else total // 4 for combo in ModalityCombo}


def balanced_counts(total: int) -> Dict[ModalityCombo, int]:
    base, extra = divmod(total, len(ModalityCombo))
    return {combo: base + (1 if i < extra else 0) for i, combo in enumerate(ModalityCombo)}


def probe_accuracy(spec: CorpusSpec, n_items: int = 1000, steps: int = 300,
                   learning_rate: float = 0.5) -> float:
    """Held-out accuracy of a logistic probe on mean patch features.

    Used to calibrate ``sigma``: the class must stay recoverable from images.
    """
    generator = CorpusGenerator(spec)
    rng = substream(spec.seed, 'probe')
    n_total = spec.n_classes + spec.n_ood_classes
    labels = np.arange(n_items) % n_total
    features = np.stack([
        generator.gen_item(int(c), rng, with_image=True).patches().mean(axis=0) for c in labels
    ])
    features = (features - features.mean(axis=0)) / (features.std(axis=0) + 1e-12)
    train = np.arange(n_items) % 2 == 0
    onehot = np.eye(n_total)[labels]

    weights = Tensor(np.zeros((spec.D_in, n_total)), requires_grad=True)
    bias = Tensor(np.zeros(n_total), requires_grad=True)
    x_train, y_train = Tensor(features[train]), Tensor(onehot[train])
    for _ in range(steps):
        loss = softmax_cross_entropy(x_train @ weights + bias, y_train).mean()
        loss.backward()
        for p in (weights, bias):
            p.data -= learning_rate * p.grad
            p.zero_grad()

    with no_grad():
        logits = (Tensor(features[~train]) @ weights + bias).data
    accuracy = float(np.mean(logits.argmax(axis=1) == labels[~train]))
    logger.info('probe accuracy %.3f at sigma=%.3f', accuracy, spec.sigma)
    return accuracy
