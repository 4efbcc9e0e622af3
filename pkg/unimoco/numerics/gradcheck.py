########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Central finite-difference verification of analytic gradients."""

import logging
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from unimoco.exceptions import ContractError
from unimoco.numerics import functional as F
from unimoco.numerics.tensor import Tensor, no_grad


logger = logging.getLogger(__name__)

OP_TOLERANCE = 1e-4
PIPELINE_TOLERANCE = 1e-3
DEFAULT_EPSILON = 1e-5
# Relative-error denominator floor, scaled by max(1, |f|).
GRAD_FLOOR = 1e-6


class GradCheckReport(BaseModel):
    name: str
    passed: bool
    max_rel_error: float
    n_checked: int
    input_index: Optional[int] = None
    element: Optional[Tuple[int, ...]] = None
    message: str = ''


def grad_check(fn: Callable[..., Tensor], inputs: Sequence[Tensor],
               epsilon: float = DEFAULT_EPSILON, tolerance: float = OP_TOLERANCE,
               name: str = 'op', seed: int = 0) -> GradCheckReport:
    """Compare backward() against central differences for every input element.

    Non-scalar outputs are contracted with a fixed random weight tensor so a
    single backward pass covers every output element. Relative error is
    ``|analytic - numeric| / max(|analytic|, |numeric|, floor)`` where
    ``floor = GRAD_FLOOR * max(1, |f|)`` and ``f`` is the unperturbed value,
    so a gradient that is wrong by a factor fails however small it is.
    """
    if not 0.0 < epsilon <= 1e-2:
        raise ContractError(f'grad_check: epsilon {epsilon} outside (0, 1e-2]')
    for t in inputs:
        if not np.all(np.isfinite(t.data)):
            raise ContractError(f'grad_check: non-finite input to {name}')

    rng = np.random.default_rng(seed)
    weights: Dict[str, np.ndarray] = {}

    def scalar() -> Tensor:
        out = fn(*inputs)
        if out.size == 1:
            return out.sum()
        if 'w' not in weights:
            weights['w'] = rng.standard_normal(out.shape)
        return (out * Tensor(weights['w'])).sum()

    flags = [t.requires_grad for t in inputs]
    for t in inputs:
        t.requires_grad = True
        t.grad = None
    try:
        scalar().backward()
        analytic = [np.zeros(t.shape) if t.grad is None else t.grad.copy() for t in inputs]
    finally:
        for t, flag in zip(inputs, flags):
            t.requires_grad = flag
            t.grad = None

    with no_grad():
        floor = GRAD_FLOOR * max(1.0, abs(scalar().item()))

    worst = GradCheckReport(name=name, passed=True, max_rel_error=0.0, n_checked=0)
    for position, (t, grad) in enumerate(zip(inputs, analytic)):
        bad = np.argwhere(~np.isfinite(grad))
        if len(bad):
            element = tuple(int(i) for i in bad[0])
            return GradCheckReport(name=name, passed=False, max_rel_error=float('inf'),
                                   n_checked=worst.n_checked, input_index=position,
                                   element=element, message='non-finite analytic gradient')
        with no_grad():
            for element in np.ndindex(t.shape):
                original = t.data[element]
                t.data[element] = original + epsilon
                upper = scalar().item()
                t.data[element] = original - epsilon
                lower = scalar().item()
                t.data[element] = original
                numeric = (upper - lower) / (2.0 * epsilon)
                if not np.isfinite(numeric):
                    return GradCheckReport(name=name, passed=False, max_rel_error=float('inf'),
                                           n_checked=worst.n_checked, input_index=position,
                                           element=tuple(int(i) for i in element),
                                           message='non-finite numeric gradient')
                a = grad[element]
                rel = abs(a - numeric) / max(abs(a), abs(numeric), floor)
                worst.n_checked += 1
                if rel > worst.max_rel_error:
                    worst.max_rel_error = float(rel)
                    worst.input_index = position
                    worst.element = tuple(int(i) for i in element)
    worst.passed = worst.max_rel_error <= tolerance
    if not worst.passed:
        worst.message = f'max relative error {worst.max_rel_error:.3e} exceeds {tolerance:.1e}'
    return worst


##########################################################
# Registered checks
##########################################################
class GradCheckCase(NamedTuple):
    build: Callable[[np.random.Generator], Tuple[Callable[..., Tensor], List[Tensor]]]
    tolerance: float = OP_TOLERANCE


def _rand(rng: np.random.Generator, *shape: int) -> Tensor:
    return Tensor(rng.standard_normal(shape))


def _matmul(rng):
    m, k, n = (int(v) for v in rng.integers(2, 6, size=3))
    return F.matmul, [_rand(rng, m, k), _rand(rng, k, n)]


def _add(rng):
    m, n = (int(v) for v in rng.integers(2, 6, size=2))
    return (lambda a, b: a + b), [_rand(rng, m, n), _rand(rng, n)]


def _mul(rng):
    m, n = (int(v) for v in rng.integers(2, 6, size=2))
    return (lambda a, b: a * b), [_rand(rng, m, n), _rand(rng, m, n)]


def _layer_norm(rng):
    d = int(rng.integers(4, 10))
    return F.layer_norm, [_rand(rng, 3, d), _rand(rng, d), _rand(rng, d)]


def _gelu(rng):
    return F.gelu, [_rand(rng, int(rng.integers(2, 6)), 4)]


def _tanh(rng):
    return F.tanh, [_rand(rng, int(rng.integers(2, 6)), 3)]


def _embedding(rng):
    vocab, d = int(rng.integers(4, 9)), int(rng.integers(2, 5))
    ids = rng.integers(0, vocab, size=(2, 5))
    return (lambda table: F.embedding(table, ids)), [_rand(rng, vocab, d)]


def _attention(rng):
    heads = int(rng.integers(1, 3))
    d = 4 * heads
    length = int(rng.integers(2, 5))
    return (lambda x, w_qkv, w_out: F.causal_self_attention(x, w_qkv, w_out, heads)), [
        _rand(rng, 2, length, d), Tensor(rng.standard_normal((3 * d, d)) * 0.5),
        Tensor(rng.standard_normal((d, d)) * 0.5)]


def _concat(rng):
    a, b = (int(v) for v in rng.integers(1, 4, size=2))
    return (lambda x, y: F.concat([x, y], axis=1)), [_rand(rng, 2, a, 3), _rand(rng, 2, b, 3)]


def _l2_normalize(rng):
    return F.l2_normalize, [_rand(rng, int(rng.integers(2, 5)), int(rng.integers(2, 6)))]


def _softmax(rng):
    return F.softmax, [_rand(rng, 3, int(rng.integers(2, 7)))]


def _softmax_cross_entropy(rng):
    n = int(rng.integers(2, 9))
    target = rng.random(n)
    target = Tensor(target / target.sum())
    return (lambda logits: F.softmax_cross_entropy(logits, target)), [_rand(rng, n)]


def _cosine_similarity(rng):
    d = int(rng.integers(2, 8))
    return F.cosine_similarity, [_rand(rng, d), _rand(rng, d)]


OP_CASES: Dict[str, GradCheckCase] = {
    'matmul': GradCheckCase(_matmul),
    'add': GradCheckCase(_add),
    'mul': GradCheckCase(_mul),
    'layer_norm': GradCheckCase(_layer_norm),
    'gelu': GradCheckCase(_gelu),
    'tanh': GradCheckCase(_tanh),
    'embedding': GradCheckCase(_embedding),
    'causal_self_attention': GradCheckCase(_attention),
    'concat': GradCheckCase(_concat),
    'l2_normalize': GradCheckCase(_l2_normalize),
    'softmax': GradCheckCase(_softmax),
    'softmax_cross_entropy': GradCheckCase(_softmax_cross_entropy),
    'cosine_similarity': GradCheckCase(_cosine_similarity),
}


def run_suite(cases: Mapping[str, GradCheckCase], seeds: Sequence[int] = (0, 1, 2),
              epsilon: float = DEFAULT_EPSILON) -> List[GradCheckReport]:
    reports = []
    for name, case in cases.items():
        for seed in seeds:
            fn, inputs = case.build(np.random.default_rng(seed))
            report = grad_check(fn, inputs, epsilon=epsilon, tolerance=case.tolerance,
                                name=f'{name}[seed={seed}]', seed=seed)
            logger.debug('%s: max rel error %.3e', report.name, report.max_rel_error)
            reports.append(report)
    return reports
