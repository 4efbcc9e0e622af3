########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

import json
import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Union

from pydantic import ValidationError

from unimoco.corpus.types import PairRecord
from unimoco.exceptions import ManifestParseError, SchemaError


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_manifest(records: Iterable[PairRecord], path: PathLike) -> int:
    """Write one JSON object per line; returns the number of records."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open('w', encoding='utf-8', newline='\n') as fh:
        for record in records:
            fh.write(record.model_dump_json(by_alias=True))
            fh.write('\n')
            count += 1
    logger.debug('wrote %d records to %s', count, path)
    return count


def iter_manifest(path: PathLike) -> Iterator[PairRecord]:
    with Path(path).open('r', encoding='utf-8') as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as err:
                raise ManifestParseError(line_number, f'malformed JSON: {err.msg}') from err
            try:
                yield PairRecord.model_validate(payload)
            except ValidationError as err:
                first = err.errors()[0]
                field = '.'.join(str(part) for part in first['loc']) or '<record>'
                raise SchemaError(line_number, f'{field}: {first["msg"]}') from err


def read_manifest(path: PathLike) -> List[PairRecord]:
    return list(iter_manifest(path))
