########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

from unimoco.corpus.types import (
    CorpusSpec,
    ModalInput,
    ModalityCombo,
    PairRecord,
    PatchGrid,
    Split,
    TaskTag,
)
from unimoco.corpus.synth import (
    CorpusGenerator,
    balanced_counts,
    combo_tallies,
    gen_corpus,
    gen_item,
    probe_accuracy,
    skewed_counts,
)
from unimoco.corpus.manifest import iter_manifest, read_manifest, write_manifest

__all__ = [
    'CorpusSpec', 'ModalInput', 'ModalityCombo', 'PairRecord', 'PatchGrid', 'Split', 'TaskTag',
    'CorpusGenerator', 'balanced_counts', 'combo_tallies', 'gen_corpus', 'gen_item',
    'probe_accuracy', 'skewed_counts', 'iter_manifest', 'read_manifest', 'write_manifest',
]
