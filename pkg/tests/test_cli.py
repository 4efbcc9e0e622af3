########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import pytest
from click.testing import CliRunner

from tests.conftest import TINY_CONFIG
from unimoco.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)


def _pipeline(runner, config_file, out):
    for command in ('gen-data', 'train'):
        result = _invoke(runner, command, '--config', config_file, '--out', out)
        assert result.exit_code == 0, result.output
    result = _invoke(runner, 'eval', '--out', out)
    assert result.exit_code == 0, result.output


def test_gen_data_is_reproducible(runner, config_file, tmp_path):
    for name in ('a', 'b'):
        result = _invoke(runner, 'gen-data', '--config', config_file, '--out', tmp_path / name)
        assert result.exit_code == 0, result.output
    for manifest in ('train.jsonl', 'eval.jsonl'):
        assert (tmp_path / 'a' / manifest).read_bytes() == (tmp_path / 'b' / manifest).read_bytes()
    assert '(T+I,T)' in result.output


def test_missing_key_names_it(runner, tmp_path):
    path = tmp_path / 'broken.conf'
    path.write_text('\n'.join(l for l in TINY_CONFIG.splitlines() if not l.startswith('corpus.seed')))
    result = _invoke(runner, 'gen-data', '--config', path, '--out', tmp_path / 'out')
    assert result.exit_code == 1
    assert 'corpus.seed' in result.output


def test_train_needs_manifests(runner, config_file, tmp_path):
    result = _invoke(runner, 'train', '--config', config_file, '--out', tmp_path)
    assert result.exit_code == 1
    assert 'gen-data' in result.output


def test_pipeline_is_deterministic(runner, config_file, tmp_path):
    for name in ('a', 'b'):
        _pipeline(runner, config_file, tmp_path / name)
    for artifact in ('train.jsonl', 'eval.jsonl', 'loss_trace.txt', 'score_report.jsonl'):
        assert (tmp_path / 'a' / artifact).read_bytes() == (tmp_path / 'b' / artifact).read_bytes()


def test_eval_twice_gives_the_same_report(runner, config_file, tmp_path):
    _pipeline(runner, config_file, tmp_path)
    first = (tmp_path / 'score_report.jsonl').read_bytes()
    assert _invoke(runner, 'eval', '--out', tmp_path, '--workers', 2).exit_code == 0
    assert (tmp_path / 'score_report.jsonl').read_bytes() == first


def test_corrupted_checkpoint_writes_no_report(runner, config_file, tmp_path):
    _invoke(runner, 'gen-data', '--config', config_file, '--out', tmp_path)
    (tmp_path / 'checkpoint.npz').write_bytes(b'garbage')
    result = _invoke(runner, 'eval', '--out', tmp_path)
    assert result.exit_code == 1
    assert not (tmp_path / 'score_report.jsonl').exists()


def test_alpha_switch_changes_the_trace(runner, config_file, tmp_path):
    traces = []
    for alpha in ('0.0', '0.2'):
        path = tmp_path / f'alpha{alpha}.conf'
        path.write_text(TINY_CONFIG + f'run.alpha = {alpha}\n')
        out = tmp_path / alpha
        for command in ('gen-data', 'train'):
            assert _invoke(runner, command, '--config', path, '--out', out).exit_code == 0
        traces.append((out / 'loss_trace.txt').read_text())
    assert traces[0] != traces[1]


def test_report_reads_saved_results(runner, config_file, tmp_path):
    _pipeline(runner, config_file, tmp_path)
    trace = _invoke(runner, 'report', tmp_path / 'loss_trace.txt', '--every', 1)
    assert trace.exit_code == 0 and 'Loss trace (3 steps)' in trace.output
    scores = _invoke(runner, 'report', tmp_path / 'score_report.jsonl')
    assert scores.exit_code == 0 and 'overall' in scores.output


def test_gradcheck_ops(runner):
    result = _invoke(runner, 'gradcheck', '--seeds', 1, '--skip-pipeline')
    assert result.exit_code == 0, result.output
    assert 'FAIL' not in result.output


def test_bias_command(runner, config_file, tmp_path):
    result = _invoke(runner, 'bias', '--config', config_file, '--out', tmp_path)
    assert result.exit_code == 0, result.output
    assert len((tmp_path / 'bias_report.jsonl').read_text().splitlines()) == 2
    assert _invoke(runner, 'report', tmp_path / 'bias_report.jsonl').exit_code == 0


def test_ablate_capacity(runner, config_file, tmp_path):
    result = _invoke(runner, 'ablate', '--config', config_file, '--out', tmp_path,
                     '--study', 'capacity')
    assert result.exit_code == 0, result.output
    summary = tmp_path / 'ablate' / 'capacity.jsonl'
    assert len(summary.read_text().splitlines()) == 3
    assert (tmp_path / 'ablate' / 'capacity' / 't2i_layers_4' / 'seed3.jsonl').exists()


def test_eval_with_config_regenerates_a_missing_manifest(runner, config_file, tmp_path):
    _pipeline(runner, config_file, tmp_path)
    first = (tmp_path / 'score_report.jsonl').read_bytes()
    (tmp_path / 'eval.jsonl').unlink()
    (tmp_path / 'score_report.jsonl').unlink()
    result = _invoke(runner, 'eval', '--config', config_file, '--out', tmp_path, '--deterministic')
    assert result.exit_code == 0, result.output
    assert (tmp_path / 'score_report.jsonl').read_bytes() == first


def test_eval_seed_needs_a_config(runner, tmp_path):
    result = _invoke(runner, 'eval', '--out', tmp_path, '--seed', 4)
    assert result.exit_code == 2
    assert '--seed needs --config' in result.output
