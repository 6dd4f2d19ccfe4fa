"""
scenario/ingest.py

Turn-count ingestion (ATSPM-style export).

CSV schema, UTF-8, comma separated:

    period_start,phase,volume,bucket_minutes
    2023-03-14T07:00:00,2,1150,60

Rows in 5 or 15 minute buckets are summed into their hour. When one hour
and phase carries rows of several bucket sizes, the coarsest size wins so
the same vehicles are never counted twice.
"""

import csv
import logging
import warnings
from collections import defaultdict
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from errors import MissingPhaseWarning, ParseError
from shiftcore import PHASES, PhaseCounts

logger = logging.getLogger(__name__)

CSV_HEADER: Tuple[str, ...] = ("period_start", "phase", "volume", "bucket_minutes")
BUCKET_SIZES: Tuple[int, ...] = (5, 15, 60)
LABEL_FORMAT = "%Y-%m-%dT%H:%M"


class TurnCountRecord(BaseModel):
    """One row of a turn-count export."""
    period_start: datetime
    phase: int
    volume: int = Field(..., ge=0)
    bucket_minutes: int

    @field_validator('phase')
    @classmethod
    def validate_phase(cls, v):
        if v not in PHASES:
            raise ValueError(f"phase must be in 1..8, got {v}")
        return v

    @field_validator('bucket_minutes')
    @classmethod
    def validate_bucket(cls, v):
        if v not in BUCKET_SIZES:
            raise ValueError(f"bucket_minutes must be one of {BUCKET_SIZES}, got {v}")
        return v

    @property
    def hour(self) -> datetime:
        return self.period_start.replace(minute=0, second=0, microsecond=0)


def parse_turn_counts(path: Union[str, Path]) -> List[TurnCountRecord]:
    """Parse and validate every row; raises ParseError with the line number."""
    records: List[TurnCountRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(h.strip() for h in reader.fieldnames) != CSV_HEADER:
            raise ParseError(f"Expected header {','.join(CSV_HEADER)}, got {reader.fieldnames}", line=1)

        for row in reader:
            line = reader.line_num
            if None in row or any(v is None or v.strip() == "" for v in row.values()):
                raise ParseError(f"Wrong number of fields: {row}", line=line)
            try:
                record = TurnCountRecord(**{k.strip(): v.strip() for k, v in row.items()})
            except ValidationError as e:
                raise ParseError(str(e.errors()[0]["msg"]), line=line) from e
            if record.period_start.minute % record.bucket_minutes or record.period_start.second:
                raise ParseError(
                    f"period_start {record.period_start.isoformat()} is not aligned to "
                    f"a {record.bucket_minutes}-minute bucket",
                    line=line,
                )
            records.append(record)

    logger.info(f"Parsed {len(records)} turn-count rows from {path}")
    return records


def aggregate_hourly(records: List[TurnCountRecord]) -> List[Tuple[str, PhaseCounts]]:
    """Sum records into one PhaseCounts per 60-minute bucket, in time order."""
    # (hour, phase) -> bucket size -> summed volume
    volumes: Dict[Tuple[datetime, int], Dict[int, int]] = defaultdict(lambda: defaultdict(int))
    for record in records:
        volumes[(record.hour, record.phase)][record.bucket_minutes] += record.volume

    hours = sorted({hour for hour, _ in volumes})
    result: List[Tuple[str, PhaseCounts]] = []
    for hour in hours:
        by_phase: Dict[int, int] = {}
        for phase in PHASES:
            by_size = volumes.get((hour, phase))
            if by_size:
                by_phase[phase] = by_size[max(by_size)]

        label = hour.strftime(LABEL_FORMAT)
        missing = [p for p in PHASES if p not in by_phase]
        if missing:
            message = f"Bucket {label} has no rows for phases {missing}; zero-filled"
            logger.warning(message)
            warnings.warn(message, MissingPhaseWarning, stacklevel=2)

        result.append((label, PhaseCounts.from_mapping(by_phase)))
    return result


def ingest_turn_counts(path: Union[str, Path]) -> List[Tuple[str, PhaseCounts]]:
    """
    Read a turn-count CSV into one (label, PhaseCounts) per hour.

    Raises
    ------
    ParseError
        On a malformed row (bad header, bad timestamp, phase outside 1..8,
        negative volume, unknown bucket size).
    """
    return aggregate_hourly(parse_turn_counts(path))
