########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

from typing import Mapping, Optional

import numpy as np


class UniMoCoError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(UniMoCoError, ValueError):
    pass


class ContractError(UniMoCoError, ValueError):
    pass


class DegenerateInputError(UniMoCoError, ValueError):
    pass


class PaddingOverflowError(UniMoCoError, ValueError):

    def __init__(self, content_length: int, max_content_length: int) -> None:
        super().__init__(
            f'content of length {content_length} does not fit the padding template; '
            f'max admissible content length is {max_content_length}'
        )
        self.content_length = content_length
        self.max_content_length = max_content_length


class ConfigError(UniMoCoError, ValueError):

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(f'{key}: {message}' if key else message)
        self.key = key


class ManifestParseError(UniMoCoError, ValueError):

    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f'line {line_number}: {message}')
        self.line_number = line_number


class SchemaError(ManifestParseError):
    pass


class EmptyCorpusError(UniMoCoError, ValueError):
    pass


class CheckpointError(UniMoCoError):
    pass


class TrainingDivergedError(UniMoCoError):

    def __init__(self, step: int, loss: float, last_good: Mapping[str, np.ndarray]) -> None:
        super().__init__(f'non-finite loss {loss!r} at step {step}')
        self.step = step
        self.loss = loss
        self.last_good = dict(last_good)
