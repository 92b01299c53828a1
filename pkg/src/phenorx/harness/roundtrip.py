"""Round-trip consistency: translate a phenotype, classify the result back.

Each phenotype is decoded into a prescription by the translator, encoded
into the 840-element vector, and classified. Heads are compared at the
granularity the two models share: the translator consumes a season while
the classifier predicts a month, so the month head matches when the
predicted month falls inside the source phenotype's season. A decode that
violates the target grammar is recorded as a grammar failure and counts
as a mismatch on every compared head.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import classifier, translator
from ..corpus.codec import encode_prescription
from ..corpus.labels import LabelSpace
from ..corpus.tokens import (GrammarError, detokenize_target, phenotype_tokens,
                             tokenize_source)
from ..corpus.types import Phenotype, Prescription, season_of_month
from .config import HarnessError

ROUNDTRIP_HEADS = ("primary", "sex", "age", "season", "year")

# Positions of the compared heads in the classifier's 7-head output.
_HEAD_SLOTS = (0, 3, 4, 5, 6)


@dataclass(frozen=True)
class RoundTripRow:
    """One phenotype's journey through translate -> encode -> classify."""

    phenotype: Phenotype
    prescription: Prescription | None
    predicted: tuple[int, ...] | None
    matches: tuple[bool, ...]
    grammar_failure: bool


@dataclass(frozen=True)
class RoundTripReport:
    """Per-phenotype rows plus aggregate match rates per compared head."""

    rows: tuple[RoundTripRow, ...]
    match_rates: tuple[float, ...]
    grammar_failure_rate: float

    @property
    def primary_match(self) -> float:
        return self.match_rates[0]


def _check_vocabularies(rcnn: classifier.Classifier, arnn: translator.Translator,
                        phenotypes: Sequence[Phenotype], space: LabelSpace) -> None:
    if tuple(rcnn.config.head_sizes) != tuple(space.head_sizes):
        raise HarnessError(
            "vocabulary mismatch: classifier heads "
            f"{tuple(rcnn.config.head_sizes)} do not fit the label space "
            f"{tuple(space.head_sizes)}"
        )
    vocab = arnn.config.source_vocab
    for ph in phenotypes:
        for token in phenotype_tokens(ph):
            if token not in vocab:
                raise HarnessError(
                    f"vocabulary mismatch: source token {token!r} is unknown "
                    "to the translator"
                )


def roundtrip_check(rcnn: classifier.Classifier, arnn: translator.Translator,
                    phenotypes: Sequence[Phenotype],
                    space: LabelSpace) -> RoundTripReport:
    """Translate each phenotype and classify the prescription back.

    Both models must have been trained against the same corpus: the
    classifier's head sizes must fit ``space`` and every phenotype token
    must be known to the translator. Phenotypes need a known year (the
    year head is one of the compared heads).
    """
    if not phenotypes:
        raise HarnessError("round-trip needs at least one phenotype")
    if any(ph.year is None for ph in phenotypes):
        raise HarnessError("round-trip phenotypes need a known year")
    _check_vocabularies(rcnn, arnn, phenotypes, space)

    vocab = arnn.config.source_vocab
    if arnn.config.beam_width == 1:
        sources = np.asarray([tokenize_source(ph, vocab).ids for ph in phenotypes],
                             dtype=np.int64)
        decoded = translator.decode_batch(arnn, sources)
    else:
        decoded = []
        for ph in phenotypes:
            try:
                decoded.append(translator.translate(arnn, ph).tokens.ids)
            except GrammarError as exc:
                decoded.append(exc.tokens)

    prescriptions: list[Prescription | None] = []
    for ids in decoded:
        try:
            prescriptions.append(detokenize_target(ids, arnn.config.target_vocab))
        except GrammarError:
            prescriptions.append(None)

    translated = [p for p in prescriptions if p is not None]
    predictions = None
    if translated:
        vectors = np.stack([encode_prescription(p) for p in translated])
        predictions = classifier.predict(rcnn, vectors)

    rows = []
    cursor = 0
    n_heads = len(ROUNDTRIP_HEADS)
    for ph, prescription in zip(phenotypes, prescriptions):
        if prescription is None:
            rows.append(RoundTripRow(phenotype=ph, prescription=None,
                                     predicted=None,
                                     matches=(False,) * n_heads,
                                     grammar_failure=True))
            continue
        predicted = tuple(int(v) for v in predictions[cursor])
        cursor += 1
        source = space.labels(ph)
        flags = []
        for head, slot in zip(ROUNDTRIP_HEADS, _HEAD_SLOTS):
            if head == "season":
                flags.append(season_of_month(predicted[slot] + 1) == ph.season)
            else:
                flags.append(predicted[slot] == int(source[slot]))
        rows.append(RoundTripRow(phenotype=ph, prescription=prescription,
                                 predicted=predicted, matches=tuple(flags),
                                 grammar_failure=False))

    matrix = np.array([row.matches for row in rows], dtype=np.float64)
    return RoundTripReport(
        rows=tuple(rows),
        match_rates=tuple(float(v) for v in matrix.mean(axis=0)),
        grammar_failure_rate=float(np.mean([r.grammar_failure for r in rows])),
    )
