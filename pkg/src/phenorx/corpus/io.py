"""Corpus serialization: one JSON object per line, one record each.

Schema (stable field order for reproducible files):

    {"icd9_1": "41001", "icd9_2": "0", "icd9_3": "0", "sex": "female",
     "age": 62, "month": 1, "year": 4,
     "components": [[12, 5.0], [310, 2.8]],
     "acupuncture": null, "schedule": 14, "duration_days": 54}

Doses are decimal grams with one fractional digit. Absent secondary or
tertiary codes are written as "0"; an unknown year is null.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .generator import Record
from .types import CorpusError, Phenotype, Prescription


def record_to_dict(record: Record) -> dict:
    ph, p = record.phenotype, record.prescription
    return {
        "icd9_1": ph.primary_icd9,
        "icd9_2": ph.secondary_icd9,
        "icd9_3": ph.tertiary_icd9,
        "sex": ph.sex,
        "age": ph.age,
        "month": ph.month,
        "year": ph.year,
        "components": [[cid, round(dose, 1)] for cid, dose in p.components],
        "acupuncture": p.acupuncture,
        "schedule": p.schedule,
        "duration_days": p.duration_days,
    }


def record_from_dict(obj: dict) -> Record:
    try:
        phenotype = Phenotype(
            primary_icd9=obj["icd9_1"],
            secondary_icd9=obj["icd9_2"],
            tertiary_icd9=obj["icd9_3"],
            sex=obj["sex"],
            age=obj["age"],
            month=obj["month"],
            year=obj["year"],
        )
        prescription = Prescription(
            components=tuple((cid, dose) for cid, dose in obj["components"]),
            acupuncture=obj["acupuncture"],
            schedule=obj["schedule"],
            duration_days=obj["duration_days"],
        )
    except KeyError as exc:
        raise CorpusError(f"record missing field {exc}") from exc
    return Record(phenotype, prescription)


def write_corpus(path: str | Path, records: Iterable[Record]) -> int:
    """Write records as JSONL; returns the number written."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), separators=(",", ":")))
            fh.write("\n")
            n += 1
    return n


def read_corpus(path: str | Path) -> list[Record]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                records.append(record_from_dict(obj))
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    return records
