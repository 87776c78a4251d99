"""Sensor detection log: parse, persist, query and 30-second replay.

The wire format is one JSON object per line with the fields
FireThreatLevel, StartDateTime, CPUTemperature, SensorId, Column, Row,
Temperature and Number.  Column/Row/Temperature/Number travel as strings
holding non-negative integers; CPUTemperature is a plain number.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

from .errors import NotFound, ParseError, SchemaError, StorageError

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S.%f"
REPLAY_LIFETIME_S = 30.0

_STRING_INT_FIELDS = ("Column", "Row", "Temperature", "Number")


@dataclass
class DetectionRecord:
    fire_threat_level: str
    start_datetime: datetime
    cpu_temperature: float
    sensor_id: str
    column: int
    row: int
    temperature: int
    number: int
    extras: dict = field(default_factory=dict)


def _string_int(raw: dict, name: str) -> int:
    value = raw[name]
    if not isinstance(value, str):
        raise SchemaError(f"{name} must be a string-encoded integer")
    try:
        n = int(value)
    except ValueError:
        raise SchemaError(f"{name} is not an integer: {value!r}") from None
    if n < 0:
        raise SchemaError(f"{name} must be non-negative")
    return n


def parse_detection(line: str) -> DetectionRecord:
    try:
        raw = json.loads(line)
    except (json.JSONDecodeError, TypeError) as e:
        raise ParseError(str(e)) from None
    if not isinstance(raw, dict):
        raise ParseError("detection line must be a JSON object")
    required = ("FireThreatLevel", "StartDateTime", "CPUTemperature",
                "SensorId") + _STRING_INT_FIELDS
    for name in required:
        if name not in raw:
            raise SchemaError(f"missing field {name}")
    if not isinstance(raw["FireThreatLevel"], str):
        raise SchemaError("FireThreatLevel must be a string")
    if not isinstance(raw["SensorId"], str):
        raise SchemaError("SensorId must be a string")
    if not isinstance(raw["CPUTemperature"], (int, float)) or isinstance(raw["CPUTemperature"], bool):
        raise SchemaError("CPUTemperature must be a number")
    if not isinstance(raw["StartDateTime"], str):
        raise SchemaError("StartDateTime must be a string")
    try:
        ts = datetime.strptime(raw["StartDateTime"], TIMESTAMP_FORMAT)
    except ValueError:
        raise SchemaError(f"bad timestamp {raw['StartDateTime']!r}") from None
    extras = {k: v for k, v in raw.items() if k not in required}
    return DetectionRecord(
        fire_threat_level=raw["FireThreatLevel"],
        start_datetime=ts,
        cpu_temperature=float(raw["CPUTemperature"]),
        sensor_id=raw["SensorId"],
        column=_string_int(raw, "Column"),
        row=_string_int(raw, "Row"),
        temperature=_string_int(raw, "Temperature"),
        number=_string_int(raw, "Number"),
        extras=extras,
    )


def serialize_detection(record: DetectionRecord) -> str:
    doc = {
        "FireThreatLevel": record.fire_threat_level,
        "StartDateTime": record.start_datetime.strftime(TIMESTAMP_FORMAT),
        "CPUTemperature": record.cpu_temperature,
        "SensorId": record.sensor_id,
        "Column": str(record.column),
        "Row": str(record.row),
        "Temperature": str(record.temperature),
        "Number": str(record.number),
    }
    doc.update(record.extras)
    return json.dumps(doc)


@dataclass(frozen=True)
class ReplayEvent:
    source_record_id: int
    fire_event: "FireEvent"        # noqa: F821 - localization.FireEvent
    lifetime: float = REPLAY_LIFETIME_S


class LogStore:
    """Append-only newline-delimited detection log with an in-memory index.

    Record ids are 1-based append order.  Appends are flushed and fsynced
    before returning.
    """

    def __init__(self, path):
        self.path = str(path)
        self._records: list[DetectionRecord] = []
        try:
            if os.path.exists(self.path):
                with open(self.path, encoding="utf-8") as f:
                    for line in f:
                        line = line.strip()
                        if line:
                            self._records.append(parse_detection(line))
            self._fh = open(self.path, "a", encoding="utf-8")
        except OSError as e:
            raise StorageError(str(e)) from None

    def close(self):
        self._fh.close()

    def append(self, record: DetectionRecord) -> int:
        try:
            self._fh.write(serialize_detection(record) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except (OSError, ValueError) as e:
            raise StorageError(str(e)) from None
        self._records.append(record)
        return len(self._records)

    def get(self, record_id: int) -> DetectionRecord:
        if not (1 <= record_id <= len(self._records)):
            raise NotFound(f"no record {record_id}")
        return self._records[record_id - 1]

    def __len__(self):
        return len(self._records)

    def query(self, time_range: Optional[tuple[datetime, datetime]] = None,
              sensor_filter: Optional[str] = None) -> list[DetectionRecord]:
        """Records in start_datetime order (stable by insertion for ties)."""
        out = []
        for r in self._records:
            if time_range is not None:
                lo, hi = time_range
                if not (lo <= r.start_datetime <= hi):
                    continue
            if sensor_filter is not None and r.sensor_id != sensor_filter:
                continue
            out.append(r)
        out.sort(key=lambda r: r.start_datetime)   # sort is stable
        return out

    def replay(self, record_id: int, scene, cameras: dict) -> ReplayEvent:
        """Re-localize a stored record; the replayed fire lives 30 seconds."""
        from .localization import localize
        record = self.get(record_id)
        camera = cameras.get(record.sensor_id)
        if camera is None:
            raise NotFound(f"no camera bound for sensor {record.sensor_id!r}")
        event = localize(scene, camera, record)
        return ReplayEvent(source_record_id=record_id, fire_event=event)
