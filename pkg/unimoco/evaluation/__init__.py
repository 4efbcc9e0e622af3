########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

from unimoco.evaluation.retrieval import (
    CandidateIndex,
    build_index,
    embed_inputs,
    match,
    precision_at_1,
)
from unimoco.evaluation.report import (
    BucketScore,
    ScoreReport,
    candidate_pool,
    combo_spread,
    evaluate,
    group_buckets,
    read_score_report,
    render_score_report,
    write_score_report,
)
from unimoco.evaluation.ablation import (
    STUDIES,
    CellSummary,
    read_summaries,
    render_summaries,
    run_study,
    write_summaries,
)
from unimoco.evaluation.bias import (
    BASELINE,
    COMPLETION,
    BiasReport,
    bias_experiment,
    lower_spread_count,
    read_bias_report,
    render_bias_report,
    write_bias_report,
)

__all__ = [
    'CandidateIndex', 'build_index', 'embed_inputs', 'match', 'precision_at_1',
    'BucketScore', 'ScoreReport', 'candidate_pool', 'combo_spread', 'evaluate', 'group_buckets',
    'read_score_report',
    'render_score_report', 'write_score_report',
    'BASELINE', 'COMPLETION', 'BiasReport', 'bias_experiment', 'lower_spread_count',
    'read_bias_report', 'render_bias_report', 'write_bias_report',
    'STUDIES', 'CellSummary', 'read_summaries', 'render_summaries', 'run_study', 'write_summaries',
]
