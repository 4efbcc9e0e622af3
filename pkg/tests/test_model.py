########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from unimoco.corpus import ModalInput
from unimoco.exceptions import (
    CheckpointError,
    ContractError,
    DimensionError,
    PaddingOverflowError,
)
from unimoco.model import (
    PSEUDO,
    REAL,
    BaselineMode,
    ModelConfig,
    PaddingConfig,
    PaddingMode,
    UniMoCoModel,
    check_compatible,
    drop_image,
    load_checkpoint,
    pad_prompt,
    save_checkpoint,
)
from unimoco.numerics import no_grad


def _item(with_image=True, content=(7, 9)):
    image = np.linspace(-1, 1, 12).reshape(4, 3).tolist() if with_image else None
    return ModalInput(instruction=[1, 4], content=list(content), image=image)


@given(st.integers(1, 6), st.integers(0, 40), st.integers(0, 40))
def test_pad_prompt_length_accounting(prompt_length, content_length, slack):
    target = prompt_length + content_length + 1 + slack
    cfg = PaddingConfig(pad_prompt=list(range(100, 100 + prompt_length)), end_token=200,
                        dummy_token=201, target_length=target)
    content = list(range(content_length))
    padded = pad_prompt(content, cfg)
    assert len(padded) == target
    assert padded.count(201) == target - prompt_length - content_length - 1
    assert padded[prompt_length + content_length] == 200


@given(st.integers(1, 6), st.integers(1, 20), st.integers(1, 10))
def test_pad_prompt_overflow(prompt_length, target, excess):
    cfg = PaddingConfig(pad_prompt=list(range(100, 100 + prompt_length)), end_token=200,
                        dummy_token=201, target_length=target)
    content = [0] * (target - prompt_length - 1 + excess)
    with pytest.raises(PaddingOverflowError) as info:
        pad_prompt(content, cfg)
    assert info.value.max_content_length == target - prompt_length - 1


def test_padding_ids_sit_above_vocab(tiny_cfg):
    padding = PaddingConfig.for_model(tiny_cfg)
    assert padding.pad_prompt == [16]
    assert (padding.end_token, padding.dummy_token) == (17, 18)
    assert padding.target_length == 4


def test_half_padding_needs_even_v():
    with pytest.raises(ValueError):
        ModelConfig(V=5, padding=PaddingMode.HALF)


@given(st.booleans())
def test_drop_image_is_idempotent(with_image):
    item = _item(with_image)
    once = drop_image(item)
    assert once.image is None
    assert drop_image(once) == once
    assert once.content == item.content


def test_embedding_is_unit_norm(tiny_model):
    with no_grad():
        for item in (_item(True), _item(False)):
            assert np.linalg.norm(tiny_model.embed(item).data) == pytest.approx(1.0, abs=1e-12)


def test_batched_embedding_matches_single(tiny_model, tiny_corpus):
    items = [r.query for r in tiny_corpus[:6]] + [r.positive_target for r in tiny_corpus[:6]]
    with no_grad():
        batch = tiny_model.embed_batch(items).data
        single = np.stack([tiny_model.embed(item).data for item in items])
    np.testing.assert_allclose(batch, single, atol=1e-12)


def test_real_and_pseudo_tokens_share_shape(tiny_model):
    item = _item(True)
    real = tiny_model.encode_image(item.patches())
    pseudo = tiny_model.complete_modality(item.content)
    assert real.provenance == REAL and pseudo.provenance == PSEUDO
    assert real.tokens.shape == pseudo.tokens.shape == (4, 8)


def test_wrong_patch_shape(tiny_model):
    with pytest.raises(DimensionError, match=r'\(3, 3\).*\(4, 3\)'):
        tiny_model.encode_image(np.zeros((3, 3)))


def test_overflowing_content_is_reported(tiny_model):
    with pytest.raises(PaddingOverflowError):
        tiny_model.embed(_item(False, content=(7, 8, 9)))


def test_half_and_no_padding_routes(tiny_cfg):
    half = UniMoCoModel(tiny_cfg.model_copy(update={'V': 8, 'padding': PaddingMode.HALF}))
    none = UniMoCoModel(tiny_cfg.model_copy(update={'padding': PaddingMode.NONE}))
    text = _item(False, content=(7,))
    assert half.route(text) == (PSEUDO, 4)
    assert none.route(text) == (PSEUDO, 1)
    assert none.route(_item(True)) == (REAL, 4)


def test_disabled_completion_zero_fills(tiny_cfg):
    model = UniMoCoModel(tiny_cfg.model_copy(update={'completion': False}))
    assert model.completion is None
    assert model.route(_item(False)) == ('zero', 4)
    with pytest.raises(ContractError):
        model.complete_modality([7, 9])
    with no_grad():
        assert model.embed(_item(False)).shape == (8,)


def test_text_only_baseline(tiny_cfg):
    model = UniMoCoModel(tiny_cfg.model_copy(update={'completion': False,
                                                     'baseline_mode': BaselineMode.TEXT_ONLY}))
    assert model.route(_item(False)) == ('none', 0)
    with no_grad():
        assert np.linalg.norm(model.embed(_item(False)).data) == pytest.approx(1.0)


def test_ablations_share_initialization(tiny_cfg):
    full = UniMoCoModel(tiny_cfg)
    baseline = UniMoCoModel(tiny_cfg.model_copy(update={'completion': False}))
    np.testing.assert_array_equal(full.backbone.blocks[0].qkv.weight.data,
                                  baseline.backbone.blocks[0].qkv.weight.data)


def test_checkpoint_round_trip(tmp_path, tiny_model, tiny_corpus):
    path = save_checkpoint(tiny_model, tmp_path / 'model.npz')
    restored = load_checkpoint(path)
    for (name, a), (_, b) in zip(tiny_model.named_parameters(), restored.named_parameters()):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)
    with no_grad():
        item = tiny_corpus[0].query
        np.testing.assert_array_equal(tiny_model.embed(item).data, restored.embed(item).data)


def test_corrupted_checkpoint(tmp_path):
    path = tmp_path / 'broken.npz'
    path.write_bytes(b'not a checkpoint')
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_shape_mismatch(tmp_path, tiny_model):
    params = {name: p.data for name, p in tiny_model.named_parameters()}
    params['backbone.ln_final.gamma'] = np.ones(3)
    path = save_checkpoint(tiny_model, tmp_path / 'model.npz', params=params)
    with pytest.raises(CheckpointError, match=r'\(3,\).*\(8,\)'):
        load_checkpoint(path)


def test_check_compatible_names_both_sides(tiny_cfg):
    check_compatible(tiny_cfg, [_item(True)])
    with pytest.raises(DimensionError, match='vocab_size 16'):
        check_compatible(tiny_cfg, [ModalInput(instruction=[1, 4], content=[40])])
    wide = ModalInput(instruction=[1, 4], content=[7], image=np.zeros((4, 5)).tolist())
    with pytest.raises(DimensionError, match=r'\(4, 5\).*\(4, 3\)'):
        check_compatible(tiny_cfg, [wide])


def _count_calls(monkeypatch, model, name):
    calls = []
    original = getattr(model, name)

    def counted(*args, **kwargs):
        calls.append(args)
        return original(*args, **kwargs)

    monkeypatch.setattr(model, name, counted)
    return calls


def test_imaged_inputs_never_reach_the_completion_module(monkeypatch, tiny_model, tiny_corpus):
    completions = _count_calls(monkeypatch, tiny_model, 'complete_modalities')
    encodings = _count_calls(monkeypatch, tiny_model, 'encode_images')
    imaged = [item for r in tiny_corpus for item in (r.query, r.positive_target) if item.has_image]
    with no_grad():
        tiny_model.embed_batch(imaged)
    assert not completions
    assert encodings


def test_text_only_inputs_never_reach_the_vision_encoder(monkeypatch, tiny_model, tiny_corpus):
    completions = _count_calls(monkeypatch, tiny_model, 'complete_modalities')
    encodings = _count_calls(monkeypatch, tiny_model, 'encode_images')
    texts = [item for r in tiny_corpus for item in (r.query, r.positive_target) if not item.has_image]
    with no_grad():
        tiny_model.embed_batch(texts)
    assert not encodings
    assert sum(len(args[0]) for args in completions) == len(texts)


def test_all_zero_patches_embed_finitely(tiny_model):
    item = ModalInput(instruction=[1, 4], content=[7, 9], image=np.zeros((4, 3)).tolist())
    with no_grad():
        vector = tiny_model.embed(item).data
    assert np.all(np.isfinite(vector))
    assert np.linalg.norm(vector) == pytest.approx(1.0, abs=1e-12)


def test_complete_modality_is_deterministic(tiny_model):
    with no_grad():
        first = tiny_model.complete_modality([7, 9]).tokens.data
        second = tiny_model.complete_modality([7, 9]).tokens.data
    np.testing.assert_array_equal(first, second)
