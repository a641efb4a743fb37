"""Loading price files, pairwise calendar intersection and trading-order offsets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DuplicateTimestamp, EmptyIntersection, NonMonotoneTimestamps, NonPositiveValue, ParseError


class Region(str, Enum):
    ASIA = "Asia"
    EUROPE = "Europe"
    NORTH_AMERICA = "NorthAmerica"
    OTHER = "Other"

    @classmethod
    def parse(cls, text: "str | Region") -> "Region":
        if isinstance(text, Region):
            return text
        key = str(text).replace(" ", "").replace("_", "").lower()
        aliases = {"us": cls.NORTH_AMERICA, "usa": cls.NORTH_AMERICA, "america": cls.NORTH_AMERICA,
                   "eu": cls.EUROPE}
        if key in aliases:
            return aliases[key]
        for r in cls:
            if r.value.lower() == key:
                return r
        raise ValueError(f"unknown region {text!r}")


# exchanges close in this order within one UTC trading day; US/Europe overlap ignored
_TRADING_ORDER = {Region.ASIA: 0, Region.EUROPE: 1, Region.NORTH_AMERICA: 2}


@dataclass(frozen=True)
class SeriesFormat:
    """How to read one delimited price file.

    ``time_format`` is ``"date"`` (ISO date), ``"datetime"`` (ISO datetime)
    or any ``strptime`` pattern.
    """

    time_column: str = "date"
    value_column: str = "close"
    delimiter: str = ","
    time_format: str = "date"
    region_column: str | None = None

    def parse_time(self, text: str):
        text = text.strip()
        if self.time_format == "date":
            return date.fromisoformat(text)
        if self.time_format == "datetime":
            return datetime.fromisoformat(text)
        return datetime.strptime(text, self.time_format)


@dataclass
class RawSeries:
    id: str
    region: Region
    timestamps: list
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.region = Region.parse(self.region)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps and values differ in length")
        check_timestamps(self.timestamps)
        bad = np.flatnonzero(~np.isfinite(self.values) | (self.values <= 0))
        if bad.size:
            raise NonPositiveValue(f"non-positive or non-finite price {self.values[bad[0]]}", row=int(bad[0]))

    def __len__(self) -> int:
        return len(self.timestamps)


def check_timestamps(keys: Sequence, rows: Sequence[int] | None = None) -> None:
    for i in range(1, len(keys)):
        if keys[i] == keys[i - 1]:
            where = rows[i] if rows is not None else i
            raise DuplicateTimestamp(f"duplicate time key {keys[i]} at row {where}")
        if keys[i] < keys[i - 1]:
            where = rows[i] if rows is not None else i
            raise NonMonotoneTimestamps(f"time key {keys[i]} at row {where} precedes {keys[i - 1]}")


def load_series(path, fmt: SeriesFormat | None = None, id: str | None = None,
                region: Region | str | None = None) -> RawSeries:
    """Read one price file into a :class:`RawSeries`.

    Rows are numbered from 1 for the header line, so row numbers in errors
    match what an editor shows. A bad row is an error; nothing is dropped.
    """
    fmt = fmt or SeriesFormat()
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)

    keys, values, rows = [], [], []
    file_region = None
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh, delimiter=fmt.delimiter)
        header = reader.fieldnames or []
        for col in (fmt.time_column, fmt.value_column):
            if col not in header:
                raise ParseError(f"missing column {col!r} in {path}", row=1)
        for lineno, rec in enumerate(reader, start=2):
            raw_t, raw_v = rec.get(fmt.time_column), rec.get(fmt.value_column)
            if raw_t is None or raw_v is None:
                raise ParseError("short row", row=lineno)
            try:
                t = fmt.parse_time(raw_t)
            except ValueError as exc:
                raise ParseError(f"bad time key {raw_t!r}: {exc}", row=lineno) from None
            try:
                v = float(raw_v)
            except ValueError:
                raise ParseError(f"bad value {raw_v!r}", row=lineno) from None
            if not math.isfinite(v) or v <= 0:
                raise NonPositiveValue(f"price must be positive and finite, got {raw_v!r}", row=lineno)
            if fmt.region_column and file_region is None:
                file_region = rec.get(fmt.region_column)
            keys.append(t)
            values.append(v)
            rows.append(lineno)

    check_timestamps(keys, rows)
    reg = region if region is not None else (file_region or Region.OTHER)
    return RawSeries(id or path.stem, Region.parse(reg), keys, np.array(values))


def intersect_dates(a: RawSeries, b: RawSeries) -> tuple[RawSeries, RawSeries]:
    """Restrict both series to the time keys they share, keeping order."""
    common = set(a.timestamps).intersection(b.timestamps)
    if not common:
        raise EmptyIntersection(f"{a.id} and {b.id} share no time keys")
    ia = [i for i, t in enumerate(a.timestamps) if t in common]
    ib = [i for i, t in enumerate(b.timestamps) if t in common]
    keys = [a.timestamps[i] for i in ia]
    return (RawSeries(a.id, a.region, keys, a.values[ia].copy()),
            RawSeries(b.id, b.region, list(keys), b.values[ib].copy()))


def region_offset(src: Region | str, dst: Region | str) -> int:
    """1 if ``src`` closes strictly before ``dst`` on the same day, else 0."""
    s, d = Region.parse(src), Region.parse(dst)
    if s not in _TRADING_ORDER or d not in _TRADING_ORDER:
        return 0
    return int(_TRADING_ORDER[s] < _TRADING_ORDER[d])


@dataclass(frozen=True)
class PairAlignment:
    common_keys: list
    src_values: np.ndarray
    dst_values: np.ndarray
    delta: int

    def __len__(self) -> int:
        return len(self.common_keys)

    def slice(self, start: int, stop: int) -> "PairAlignment":
        return PairAlignment(self.common_keys[start:stop], self.src_values[start:stop],
                             self.dst_values[start:stop], self.delta)

    def select(self, mask) -> "PairAlignment":
        idx = np.flatnonzero(np.asarray(mask))
        return PairAlignment([self.common_keys[i] for i in idx], self.src_values[idx],
                             self.dst_values[idx], self.delta)


def align_pair(src: RawSeries, dst: RawSeries) -> PairAlignment:
    s, d = intersect_dates(src, dst)
    return PairAlignment(s.timestamps, s.values, d.values, region_offset(src.region, dst.region))
