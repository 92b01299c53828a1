"""Sentence construction for both translation directions.

Source sentences carry exactly 7 tokens: primary, secondary and tertiary
ICD-9 codes, sex, age, season, year. Target sentences are
[zipf][component+][schedule][duration][EOS]: the dose profile collapses
into the leading zipf token, components follow in non-increasing dose
order, and serving schedule and duration close the sentence.
"""

from __future__ import annotations

from dataclasses import dataclass

from .types import (
    ABSENT_ICD9,
    MAX_DOSE_G,
    CorpusError,
    Phenotype,
    Prescription,
)
from .vocab import EOS, PAD, Vocabulary
from .zipf import ZipfModel

BUCKETS = (8, 10, 12, 18)

# Serving schedules 1..27: (times per day, timing note). The note is
# descriptive only; rendered output shows the daily frequency.
SCHEDULE_TABLE = (
    (3, "after meals"), (3, "before meals"), (3, "between meals"),
    (3, "with warm water"), (3, "morning noon evening"), (3, "after meals and at bedtime"),
    (3, "before meals, warm"), (3, "split with breakfast"), (3, "split with dinner"),
    (2, "morning and evening"), (2, "after lunch and dinner"), (2, "before breakfast and bed"),
    (2, "after and before bedtime"), (2, "with meals"), (2, "warm, morning and night"),
    (2, "noon and bedtime"), (1, "at bedtime"), (1, "before breakfast"),
    (1, "after dinner"), (1, "mid-morning"), (1, "with warm water"),
    (1, "on waking"), (4, "every six hours"), (4, "after meals and bedtime"),
    (4, "before meals and bedtime"), (4, "morning noon evening night"), (4, "with each meal and bed"),
)
assert len(SCHEDULE_TABLE) == 27


class GrammarError(ValueError):
    """Target sentence violating [zipf][component+][schedule][duration]."""

    def __init__(self, message: str, position: int, tokens=()):
        super().__init__(f"{message} (position {position})")
        self.position = position
        self.tokens = tuple(tokens)


@dataclass(frozen=True)
class TokenSequence:
    role: str
    ids: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.ids)


def schedule_text(schedule: int) -> str:
    """Daily-frequency rendering of a schedule id, e.g. "3 TIMES A DAY"."""
    times = SCHEDULE_TABLE[schedule - 1][0]
    return f"{times} TIME A DAY" if times == 1 else f"{times} TIMES A DAY"


def phenotype_tokens(ph: Phenotype) -> list[str]:
    """The 7 source token strings for a phenotype."""
    icd = lambda c: "icd:NA" if c == ABSENT_ICD9 else f"icd:{c}"
    year = "year:NA" if ph.year is None else f"year:{ph.year}"
    return [
        icd(ph.primary_icd9),
        icd(ph.secondary_icd9),
        icd(ph.tertiary_icd9),
        f"sex:{ph.sex}",
        f"age:{ph.age}",
        f"season:{ph.season}",
        year,
    ]


def tokenize_source(ph: Phenotype, vocab: Vocabulary) -> TokenSequence:
    """Tokenize a phenotype; unknown tokens fall back to UNK, never fail."""
    return TokenSequence("source", tuple(vocab.index(t) for t in phenotype_tokens(ph)))


def prescription_tokens(p: Prescription) -> list[str]:
    model = ZipfModel.fit(p.doses)
    parts = [f"zipf:{model.interval_token}"]
    parts.extend(f"comp:{cid}" for cid in p.component_ids)
    parts.append(f"sched:{p.schedule}")
    parts.append(f"dur:{p.duration_days}")
    return parts


def tokenize_target(p: Prescription, vocab: Vocabulary) -> TokenSequence:
    ids = [vocab.index(t) for t in prescription_tokens(p)]
    ids.append(EOS)
    return TokenSequence("target", tuple(ids))


def detokenize_target(seq: TokenSequence | tuple[int, ...], vocab: Vocabulary) -> Prescription:
    """Parse a target sentence back into a prescription.

    Doses are reconstructed from the zipf token's interval center with the
    5 g anchor; component order, schedule and duration are exact.
    Raises GrammarError (with the offending position) on any sentence that
    does not match [zipf][component+][schedule][duration][EOS?].
    """
    ids = seq.ids if isinstance(seq, TokenSequence) else tuple(seq)

    def fail(msg: str, pos: int):
        raise GrammarError(msg, pos, ids)

    def kind_value(i: int) -> tuple[str, str]:
        kind, _, value = vocab.token(ids[i]).partition(":")
        return kind, value

    if not ids:
        fail("empty sentence", 0)
    if kind_value(0)[0] != "zipf":
        fail("sentence must open with a zipf token", 0)
    zipf_tok = int(kind_value(0)[1])

    comps: list[int] = []
    pos = 1
    while pos < len(ids) and kind_value(pos)[0] == "comp":
        cid = int(kind_value(pos)[1])
        if cid in comps:
            fail(f"duplicate component {cid}", pos)
        comps.append(cid)
        pos += 1
    if not comps:
        fail("expected at least one component token", pos if pos < len(ids) else len(ids) - 1)

    if pos >= len(ids) or kind_value(pos)[0] != "sched":
        fail("expected a schedule token", min(pos, len(ids) - 1))
    schedule = int(kind_value(pos)[1])
    pos += 1

    if pos >= len(ids) or kind_value(pos)[0] != "dur":
        fail("expected a duration token", min(pos, len(ids) - 1))
    duration = int(kind_value(pos)[1])
    pos += 1

    if pos < len(ids) and ids[pos] == EOS:
        pos += 1
    while pos < len(ids):
        if ids[pos] != PAD:
            fail("trailing tokens after sentence end", pos)
        pos += 1

    doses = ZipfModel.from_token(zipf_tok, MAX_DOSE_G).weights(len(comps))
    try:
        return Prescription(
            components=tuple(zip(comps, doses)),
            schedule=schedule,
            duration_days=duration,
        )
    except CorpusError as exc:
        raise GrammarError(str(exc), len(ids) - 1, ids) from exc


def bucket_of(seq: TokenSequence | tuple[int, ...]) -> int | None:
    """Smallest bucket holding the sentence (EOS included); None = dropped."""
    n = len(seq)
    for b in BUCKETS:
        if n <= b:
            return b
    return None


def build_source_vocab(records) -> Vocabulary:
    """Source vocabulary from corpus occurrence plus the two NA tokens."""
    tokens = {"icd:NA", "year:NA"}
    for r in records:
        tokens.update(phenotype_tokens(getattr(r, "phenotype", r)))
    return Vocabulary("source", tokens)


def build_target_vocab(records) -> Vocabulary:
    tokens = set()
    for r in records:
        tokens.update(prescription_tokens(getattr(r, "prescription", r)))
    return Vocabulary("target", tokens)
