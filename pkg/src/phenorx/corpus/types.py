"""Domain types: prescriptions, phenotypes and the component id space.

Component ids index a fixed catalogue of 718 granulated products: ids
1..303 are classic multi-herb formulas, ids 304..718 are single herbs.
The kind of a component is derivable from its id alone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

N_FORMULAS = 303
N_HERBS = 415
N_COMPONENTS = N_FORMULAS + N_HERBS

# Maximum single-serving weight of one component in grams; doses above
# this are rejected so the dose/MAX normalization stays invertible.
MAX_DOSE_G = 5.0

N_ACUPUNCTURE = 5
N_SCHEDULES = 27
MAX_DURATION_DAYS = 90

MAX_AGE = 104
N_YEARS = 10

SEASONS = ("winter", "spring", "summer", "autumn")
SEXES = ("male", "female")

ABSENT_ICD9 = "0"

_ICD9_RE = re.compile(r"^\d{3,5}$")


class CorpusError(ValueError):
    """Invalid domain value (bad dose, malformed code, broken invariant)."""


def component_kind(component_id: int) -> str:
    """Return "formula" or "herb" for a component id."""
    if not 1 <= component_id <= N_COMPONENTS:
        raise CorpusError(f"component id {component_id} outside [1, {N_COMPONENTS}]")
    return "formula" if component_id <= N_FORMULAS else "herb"


def season_of_month(month: int) -> str:
    """Dec-Feb winter, Mar-May spring, Jun-Aug summer, Sep-Nov autumn."""
    if not 1 <= month <= 12:
        raise CorpusError(f"month {month} outside [1, 12]")
    return SEASONS[(month % 12) // 3]


def validate_icd9(code: str) -> str:
    """An ICD-9 code string: 3-5 digits, no dot. "0" marks an absent code."""
    if code == ABSENT_ICD9:
        return code
    if not isinstance(code, str) or not _ICD9_RE.match(code):
        raise CorpusError(f"bad ICD-9 code {code!r} (want 3-5 digits, no dot)")
    return code


@dataclass(frozen=True)
class Prescription:
    """A weighted combination of components plus serving schedule and duration.

    Components are stored canonically: non-increasing dose, ties broken by
    ascending component id. The constructor sorts and validates, so every
    live instance satisfies the invariants.
    """

    components: tuple[tuple[int, float], ...]
    acupuncture: int | None = None
    schedule: int = 1
    duration_days: int = 7

    def __post_init__(self) -> None:
        if not self.components:
            raise CorpusError("prescription needs at least one component")
        seen = set()
        for cid, dose in self.components:
            component_kind(cid)
            if cid in seen:
                raise CorpusError(f"duplicate component id {cid}")
            seen.add(cid)
            if not 0.0 < dose <= MAX_DOSE_G:
                raise CorpusError(f"dose {dose} g for component {cid} outside (0, {MAX_DOSE_G}]")
        ordered = tuple(sorted(self.components, key=lambda c: (-c[1], c[0])))
        object.__setattr__(self, "components", tuple((int(i), float(d)) for i, d in ordered))
        if self.acupuncture is not None and not 1 <= self.acupuncture <= N_ACUPUNCTURE:
            raise CorpusError(f"acupuncture modality {self.acupuncture} outside [1, {N_ACUPUNCTURE}]")
        if not 1 <= self.schedule <= N_SCHEDULES:
            raise CorpusError(f"schedule {self.schedule} outside [1, {N_SCHEDULES}]")
        if not 1 <= self.duration_days <= MAX_DURATION_DAYS:
            raise CorpusError(f"duration {self.duration_days} outside [1, {MAX_DURATION_DAYS}]")

    @property
    def component_ids(self) -> tuple[int, ...]:
        return tuple(cid for cid, _ in self.components)

    @property
    def doses(self) -> tuple[float, ...]:
        return tuple(dose for _, dose in self.components)


@dataclass(frozen=True)
class Phenotype:
    """The patient-side record: up to three ICD-9 codes plus demographics.

    `year` is an offset into the observation window (0..9); None marks an
    unspecified year and is only meaningful for translation queries.
    """

    primary_icd9: str
    secondary_icd9: str = ABSENT_ICD9
    tertiary_icd9: str = ABSENT_ICD9
    sex: str = "male"
    age: int = 0
    month: int = 1
    year: int | None = 0

    def __post_init__(self) -> None:
        for code in (self.primary_icd9, self.secondary_icd9, self.tertiary_icd9):
            validate_icd9(code)
        if self.primary_icd9 == ABSENT_ICD9:
            raise CorpusError("primary ICD-9 code may not be absent")
        if self.secondary_icd9 == ABSENT_ICD9 and self.tertiary_icd9 != ABSENT_ICD9:
            raise CorpusError("tertiary ICD-9 present while secondary is absent")
        if self.sex not in SEXES:
            raise CorpusError(f"sex {self.sex!r} not in {SEXES}")
        if not 0 <= self.age <= MAX_AGE:
            raise CorpusError(f"age {self.age} outside [0, {MAX_AGE}]")
        if not 1 <= self.month <= 12:
            raise CorpusError(f"month {self.month} outside [1, 12]")
        if self.year is not None and not 0 <= self.year <= N_YEARS - 1:
            raise CorpusError(f"year offset {self.year} outside [0, {N_YEARS - 1}]")

    @property
    def season(self) -> str:
        return season_of_month(self.month)
