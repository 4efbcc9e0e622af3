########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named consumer of the top-level seed."""
    key = zlib.crc32(name.encode('utf-8'))
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))
