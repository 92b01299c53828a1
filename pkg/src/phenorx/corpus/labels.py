"""Label space for the seven classification heads.

Head order is fixed: primary disease, secondary disease, tertiary
disease, sex, age, month, year. Secondary and tertiary heads reserve
index 0 for "none"; disease indices follow the sorted code list so the
mapping is reproducible from any corpus sample.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .types import ABSENT_ICD9, CorpusError, MAX_AGE, N_YEARS, SEXES, Phenotype

HEAD_NAMES = ("primary", "secondary", "tertiary", "sex", "age", "month", "year")


@dataclass(frozen=True)
class LabelSpace:
    disease_codes: tuple[str, ...]

    def __post_init__(self):
        if not self.disease_codes:
            raise CorpusError("label space needs at least one disease code")
        if list(self.disease_codes) != sorted(set(self.disease_codes)):
            raise CorpusError("disease codes must be sorted and unique")

    @classmethod
    def from_records(cls, records: Iterable) -> "LabelSpace":
        codes = set()
        for record in records:
            ph = record.phenotype
            for code in (ph.primary_icd9, ph.secondary_icd9, ph.tertiary_icd9):
                if code != ABSENT_ICD9:
                    codes.add(code)
        return cls(tuple(sorted(codes)))

    @property
    def n_diseases(self) -> int:
        return len(self.disease_codes)

    @property
    def head_sizes(self) -> tuple[int, ...]:
        n = self.n_diseases
        return (n, n + 1, n + 1, len(SEXES), MAX_AGE + 1, 12, N_YEARS)

    def disease_index(self, code: str) -> int:
        i = bisect.bisect_left(self.disease_codes, code)
        if i == len(self.disease_codes) or self.disease_codes[i] != code:
            raise CorpusError(f"ICD-9 code {code} not in label space")
        return i

    def labels(self, ph: Phenotype) -> np.ndarray:
        """Seven head label indices for a phenotype."""
        if ph.year is None:
            raise CorpusError("classification labels require a known year")

        def aux(code: str) -> int:
            return 0 if code == ABSENT_ICD9 else 1 + self.disease_index(code)

        return np.array(
            [
                self.disease_index(ph.primary_icd9),
                aux(ph.secondary_icd9),
                aux(ph.tertiary_icd9),
                SEXES.index(ph.sex),
                ph.age,
                ph.month - 1,
                ph.year,
            ],
            dtype=np.int64,
        )

    def label_matrix(self, records: Sequence) -> np.ndarray:
        """(n_records, 7) int64 matrix of head labels."""
        return np.stack([self.labels(r.phenotype) for r in records])

    def class_names(self, head: str) -> list[str]:
        """Readable class names of one head, in index order (for reports)."""
        if head == "primary":
            return list(self.disease_codes)
        if head in ("secondary", "tertiary"):
            return ["none", *self.disease_codes]
        if head == "sex":
            return list(SEXES)
        if head == "age":
            return [str(a) for a in range(MAX_AGE + 1)]
        if head == "month":
            return [str(m) for m in range(1, 13)]
        if head == "year":
            return [str(y) for y in range(N_YEARS)]
        raise CorpusError(f"unknown head {head!r}")

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"disease_codes": list(self.disease_codes)}, fh, indent=0)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "LabelSpace":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls(tuple(obj["disease_codes"]))
