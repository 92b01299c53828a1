"""Prescription <-> 840-vector codec.

Layout (1-based element numbers, matching the catalogue ids):
  1..718    component doses, normalized by the 5 g maximum
  719..723  acupuncture modality one-hot (all zero when absent)
  724..750  serving schedule one-hot, 27 slots
  751..840  duration one-hot, 1..90 days

All entries land in [0, 1]. The schedule and duration bands carry exactly
one 1 each; the acupuncture band carries at most one.
"""

from __future__ import annotations

import numpy as np

from .types import (
    MAX_DOSE_G,
    MAX_DURATION_DAYS,
    N_ACUPUNCTURE,
    N_COMPONENTS,
    N_SCHEDULES,
    Prescription,
)

VECTOR_SIZE = 840

# 0-based band offsets
_ACU_LO = N_COMPONENTS                      # 718
_SCHED_LO = _ACU_LO + N_ACUPUNCTURE         # 723
_DUR_LO = _SCHED_LO + N_SCHEDULES           # 750
assert _DUR_LO + MAX_DURATION_DAYS == VECTOR_SIZE

# Doses come in decimal grams; values this close to the 0.1 g grid are
# float-division residue, not signal.
_GRID_SNAP = 5e-7


class MalformedVectorError(ValueError):
    """Encoded vector violates the band layout invariants."""


def encode_prescription(p: Prescription) -> np.ndarray:
    """Encode a prescription as the 840-element normalized vector."""
    v = np.zeros(VECTOR_SIZE, dtype=np.float64)
    for cid, dose in p.components:
        v[cid - 1] = dose / MAX_DOSE_G
    if p.acupuncture is not None:
        v[_ACU_LO + p.acupuncture - 1] = 1.0
    v[_SCHED_LO + p.schedule - 1] = 1.0
    v[_DUR_LO + p.duration_days - 1] = 1.0
    return v


def validate_encoded_vector(v: np.ndarray) -> None:
    """Raise MalformedVectorError unless v satisfies all band invariants."""
    v = np.asarray(v)
    if v.shape != (VECTOR_SIZE,):
        raise MalformedVectorError(f"expected shape ({VECTOR_SIZE},), got {v.shape}")
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise MalformedVectorError("entries outside [0, 1]")
    if not np.any(v[:_ACU_LO] > 0.0):
        raise MalformedVectorError("empty prescription: dose band all zero")
    acu = v[_ACU_LO:_SCHED_LO]
    if np.count_nonzero(acu) > 1 or np.any((acu != 0.0) & (acu != 1.0)):
        raise MalformedVectorError("acupuncture band must hold at most one 1")
    for name, band in (("schedule", v[_SCHED_LO:_DUR_LO]), ("duration", v[_DUR_LO:])):
        ones = np.count_nonzero(band)
        if ones != 1 or np.any((band != 0.0) & (band != 1.0)):
            raise MalformedVectorError(f"{name} band must hold exactly one 1, found {ones}")


def decode_vector(v: np.ndarray) -> Prescription:
    """Exact inverse of encode_prescription.

    Doses are recovered as value * 5.0 g and snapped to the 0.1 g grid
    when within float-rounding distance of it, so prescriptions built on
    the domain's decimal dose grain round-trip bit-exactly.
    """
    v = np.asarray(v, dtype=np.float64)
    validate_encoded_vector(v)
    components = []
    for idx in np.nonzero(v[:_ACU_LO] > 0.0)[0]:
        raw = v[idx] * MAX_DOSE_G
        snapped = round(raw, 1)
        components.append((int(idx) + 1, snapped if abs(snapped - raw) < _GRID_SNAP else raw))
    acu_idx = np.nonzero(v[_ACU_LO:_SCHED_LO])[0]
    schedule = int(np.nonzero(v[_SCHED_LO:_DUR_LO])[0][0]) + 1
    duration = int(np.nonzero(v[_DUR_LO:])[0][0]) + 1
    return Prescription(
        components=tuple(components),
        acupuncture=int(acu_idx[0]) + 1 if acu_idx.size else None,
        schedule=schedule,
        duration_days=duration,
    )
