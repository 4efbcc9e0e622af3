########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import numpy as np
import pytest
from fastapi.testclient import TestClient

from unimoco.numerics import no_grad
from unimoco.service.main import app
from unimoco.service.retrieval import CHECKPOINT_ENV, get_model


@pytest.fixture
def client(tiny_model):
    app.dependency_overrides[get_model] = lambda: tiny_model
    yield TestClient(app)
    app.dependency_overrides.clear()


def _payload(item):
    return item.model_dump(mode='json')


def test_health(client):
    response = client.get('/api/health')
    assert response.status_code == 200
    assert response.json()['status'] == 'OK'


def test_embed_matches_the_model(client, tiny_model, tiny_corpus):
    item = tiny_corpus[0].query
    response = client.post('/api/embed', json=_payload(item))
    assert response.status_code == 200
    with no_grad():
        expected = tiny_model.embed(item).data
    np.testing.assert_allclose(response.json()['embedding'], expected, atol=1e-12)


def test_match_picks_the_query_itself(client, tiny_corpus):
    candidates = [r.positive_target for r in tiny_corpus[:5]]
    response = client.post('/api/match', json={'query': _payload(candidates[2]),
                                               'candidates': [_payload(c) for c in candidates]})
    assert response.status_code == 200
    body = response.json()
    assert len(body['scores']) == 5
    assert body['scores'][2] == pytest.approx(1.0)
    assert body['scores'][body['best']] == pytest.approx(max(body['scores']))


def test_match_without_candidates(client, tiny_corpus):
    response = client.post('/api/match', json={'query': _payload(tiny_corpus[0].query),
                                               'candidates': []})
    assert response.status_code == 422


def test_out_of_vocabulary_token(client):
    response = client.post('/api/embed', json={'instruction': [1, 4], 'content': [99]})
    assert response.status_code == 422
    assert 'vocab_size' in response.json()['detail']


@pytest.fixture
def bare_client():
    app.dependency_overrides.clear()
    get_model.cache_clear()
    yield TestClient(app)
    get_model.cache_clear()


def test_embed_without_a_checkpoint_is_unavailable(bare_client, monkeypatch, tiny_corpus):
    monkeypatch.delenv(CHECKPOINT_ENV, raising=False)
    response = bare_client.post('/api/embed', json=_payload(tiny_corpus[0].query))
    assert response.status_code == 503
    assert CHECKPOINT_ENV in response.json()['detail']


def test_unreadable_checkpoint_is_unavailable(bare_client, monkeypatch, tmp_path, tiny_corpus):
    monkeypatch.setenv(CHECKPOINT_ENV, str(tmp_path / 'missing.npz'))
    response = bare_client.post('/api/embed', json=_payload(tiny_corpus[0].query))
    assert response.status_code == 503
    assert 'cannot read checkpoint' in response.json()['detail']


def test_health_does_not_need_a_checkpoint(bare_client, monkeypatch):
    monkeypatch.delenv(CHECKPOINT_ENV, raising=False)
    assert bare_client.get('/api/health').status_code == 200
