"""Seeded synthetic corpus with inspectable ground truth.

Every disease owns a prescription template: its marker component (the
heaviest slot, unique to the disease when its category pool is large
enough), an ordered draw of body components from the category pool, and
the category's synonym component last. A profile also fixes a decay
exponent, a serving schedule and (optionally) an acupuncture modality.

A record's prescription is a deterministic function of its phenotype:

  * females get the template's synonym component swapped for its
    interchangeable partner,
  * winter and summer append a season herb shared across all diseases,
  * the age band (7-year unit) fixes the serving duration, and age also
    nudges the decay exponent continuously,
  * the year shifts the decay exponent within the profile's interval,
  * a comorbid record merges the heaviest components of both templates
    (both markers survive) and decays more slowly (lower exponent) than
    either profile alone.

Only the optional noise stage (one random component swap on a
noise_rate fraction of records) breaks the phenotype -> prescription
function, so a noiseless corpus is exactly learnable and the marker
lookup in infer_primary inverts compose exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .types import (
    N_COMPONENTS as CATALOGUE_SIZE,
    N_FORMULAS,
    CorpusError,
    MAX_DOSE_G,
    Phenotype,
    Prescription,
)
from .zipf import reconstruct_weights

MIN_TEMPLATE = 4
MAX_TEMPLATE = 8
WINTER_DOSE_G = 0.2
SUMMER_DOSE_G = 0.3
N_SEASON_HERBS = 2  # one for winter, one for summer

DURATION_BAND_YEARS = 7  # ages are grouped in 7-year bands


class ConfigError(ValueError):
    """Generator configuration that cannot produce a valid corpus."""


@dataclass(frozen=True)
class GeneratorConfig:
    n_components: int = 60
    n_diseases: int = 40
    n_categories: int = 5
    comorbidity_rate: float = 0.25
    tertiary_rate: float = 0.3
    noise_rate: float = 0.0
    acupuncture_diseases: int = 0
    records_per_profile: int = 500
    seed: int = 0
    preset: str = "desk"

    @classmethod
    def desk(cls, **overrides) -> "GeneratorConfig":
        return replace(cls(), **overrides)

    @classmethod
    def paper(cls, **overrides) -> "GeneratorConfig":
        base = cls(
            n_components=718,
            n_diseases=909,
            n_categories=18,
            records_per_profile=20,
            preset="paper",
        )
        return replace(base, **overrides)

    def validate(self) -> None:
        if self.n_components < MAX_TEMPLATE:
            raise ConfigError(
                f"n_components {self.n_components} below the maximum template size {MAX_TEMPLATE}"
            )
        if self.n_components > CATALOGUE_SIZE:
            raise ConfigError(f"n_components {self.n_components} exceeds catalogue {CATALOGUE_SIZE}")
        pool = (self.n_components - N_SEASON_HERBS) // self.n_categories
        # a pool needs a synonym pair, one marker, and the smallest template body
        if pool < MIN_TEMPLATE + 1:
            raise ConfigError(
                f"{self.n_components} components across {self.n_categories} categories "
                f"leaves pools of {pool}, need {MIN_TEMPLATE + 1}"
            )
        if self.n_diseases < self.n_categories:
            raise ConfigError("need at least one disease per category")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigError(f"noise_rate {self.noise_rate} outside [0, 1]")
        if not 0.0 <= self.comorbidity_rate <= 1.0:
            raise ConfigError(f"comorbidity_rate {self.comorbidity_rate} outside [0, 1]")
        if not 0 <= self.acupuncture_diseases <= self.n_diseases:
            raise ConfigError("acupuncture_diseases outside [0, n_diseases]")
        if self.records_per_profile < 1:
            raise ConfigError("records_per_profile must be positive")


@dataclass(frozen=True)
class DiseaseProfile:
    disease_id: int
    icd9: str
    category: int
    template: tuple[int, ...]
    alternates: tuple[int, ...]
    zipf_exponent: float
    schedule: int
    acupuncture: int | None


@dataclass(frozen=True)
class Record:
    phenotype: Phenotype
    prescription: Prescription


def _split_counts(total: int, k: int) -> list[int]:
    """k bucket sizes summing to total, differing by at most one."""
    if k <= 0:
        return []
    base, extra = divmod(total, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


POOL_GAP = 8  # empty id slots between pool windows, when the catalogue has room
MAX_POOL_STRIDE = 5


def _plan_pools(n_components: int, n_categories: int) -> tuple[list[list[int]], list[int]]:
    """Assign catalogue ids to category pools plus the two season herbs.

    Each pool occupies one window of the id space, dilated by a
    category-specific stride where the catalogue has room: the spacing of a
    pool's members then marks its category locally, and that spacing
    survives encoding. Pools never straddle the formula/herb boundary;
    when the catalogue is too crowded for dilation, the strides (and then
    the gaps between windows) degrade toward plain contiguous blocks.
    """
    n_formulas = max(1, n_components * N_FORMULAS // CATALOGUE_SIZE)
    n_herbs = n_components - n_formulas
    if n_herbs < N_SEASON_HERBS + 1:  # keep at least one poolable herb
        n_formulas = max(1, n_components - N_SEASON_HERBS - 1)
        n_herbs = n_components - n_formulas
    n_pool_herbs = n_herbs - N_SEASON_HERBS

    n_formula_pools = round(n_categories * n_formulas / (n_formulas + n_pool_herbs))
    n_formula_pools = min(max(n_formula_pools, 1), n_categories - 1) if n_categories > 1 else 0
    sizes = _split_counts(n_formulas, n_formula_pools) + _split_counts(
        n_pool_herbs + (n_formulas if n_formula_pools == 0 else 0),
        n_categories - n_formula_pools,
    )

    def layout(max_stride: int, gap: int):
        pools: list[list[int]] = []
        cursor, limit = 1, N_FORMULAS
        if n_formula_pools == 0:
            cursor, limit = N_FORMULAS + 1, CATALOGUE_SIZE
        for cat, size in enumerate(sizes):
            if cat == n_formula_pools and n_formula_pools > 0:
                cursor, limit = max(cursor, N_FORMULAS + 1), CATALOGUE_SIZE
            stride = cat % max_stride + 1
            ids = list(range(cursor, cursor + size * stride, stride))[:size]
            if not ids or ids[-1] > limit:
                return None
            pools.append(ids)
            cursor = ids[-1] + 1 + gap
        # season herbs live well clear of the last pool window so their
        # spikes never read as pool-member patterns; fall back to the next
        # free slots when the catalogue is packed
        start = max(cursor + 2 * POOL_GAP, N_FORMULAS + 1)
        if start + 1 > CATALOGUE_SIZE:
            start = max(cursor, N_FORMULAS + 1)
        season = [start, start + 1]
        if season[-1] > CATALOGUE_SIZE:
            return None
        return pools, season

    for max_stride in range(MAX_POOL_STRIDE, 0, -1):
        for gap in (POOL_GAP, 0):
            planned = layout(max_stride, gap)
            if planned is not None:
                return planned
    raise ConfigError(
        f"cannot place {n_components} components across {n_categories} category pools"
    )


def duration_for_age(age: int) -> int:
    band = min(age // DURATION_BAND_YEARS, 12)
    return 18 + 6 * band


@dataclass
class GroundTruth:
    """The generative model behind a corpus, exposed for oracle tests."""

    config: GeneratorConfig
    components: list[int]
    profiles: list[DiseaseProfile]
    season_herbs: dict[str, int]
    synonym_pairs: dict[int, tuple[int, int]]
    pools: list[list[int]] = field(repr=False, default_factory=list)
    popularity: np.ndarray = field(repr=False, default=None)

    @classmethod
    def build(cls, cfg: GeneratorConfig) -> "GroundTruth":
        cfg.validate()
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[0])
        pools, season_ids = _plan_pools(cfg.n_components, cfg.n_categories)
        season_herbs = {"winter": season_ids[0], "summer": season_ids[1]}
        components = sorted(set().union(*pools, season_ids))
        if min(len(p) for p in pools) < MIN_TEMPLATE + 1:
            raise ConfigError(
                f"component pools of sizes {[len(p) for p in pools]} cannot host "
                f"a synonym pair, a marker and a {MIN_TEMPLATE}-component template"
            )

        synonym_pairs = {}
        for cat, pool in enumerate(pools):
            pool_herbs = [c for c in pool if c > N_FORMULAS]
            pair_src = pool_herbs if len(pool_herbs) >= 2 else pool
            synonym_pairs[cat] = (pair_src[-2], pair_src[-1])

        # marker candidates per pool, in id order; disease i of a category
        # takes candidate i, so markers are globally unique whenever each
        # pool has at least as many candidates as diseases
        marker_pool = {
            cat: [c for c in pool if c not in synonym_pairs[cat]]
            for cat, pool in enumerate(pools)
        }

        profiles = []
        for d in range(cfg.n_diseases):
            cat = d % cfg.n_categories
            syn_a, _ = synonym_pairs[cat]
            candidates = marker_pool[cat]
            marker = candidates[(d // cfg.n_categories) % len(candidates)]
            body_pool = [c for c in candidates if c != marker]
            # within a category, diseases are told apart by translation-free
            # cues: the decay exponent takes one of three well-separated
            # levels (the dose histogram shifts whole bands) and the
            # template size one of three counts, a 3x3 grid per category
            rung = d // cfg.n_categories
            z = 0.45 + 0.3 * ((rung // 3) % 3)
            size = min(MAX_TEMPLATE - 2 + rung % 3, 2 + len(body_pool))
            body = rng.choice(len(body_pool), size=size - 2, replace=False)
            ordered = sorted(body_pool[i] for i in body)  # formulas first, then herbs
            template = (marker,) + tuple(ordered) + (syn_a,)
            spares = [c for c in body_pool if c not in ordered]
            profiles.append(
                DiseaseProfile(
                    disease_id=d,
                    icd9=str(10000 + (d * 89) % 90000),
                    category=cat,
                    template=template,
                    alternates=tuple(spares[:2]),
                    zipf_exponent=z,
                    schedule=(7 * d) % 27 + 1,
                    acupuncture=(d % 5) + 1 if d < cfg.acupuncture_diseases else None,
                )
            )

        ranks = np.arange(1, cfg.n_diseases + 1, dtype=np.float64)
        popularity = ranks ** -0.7
        popularity /= popularity.sum()
        return cls(cfg, components, profiles, season_herbs, synonym_pairs, pools, popularity)

    # -- lookups -------------------------------------------------------

    def profile_by_code(self, icd9: str) -> DiseaseProfile:
        for p in self.profiles:
            if p.icd9 == icd9:
                return p
        raise CorpusError(f"no disease with ICD-9 {icd9}")

    def category_by_code(self) -> dict[str, int]:
        return {p.icd9: p.category for p in self.profiles}

    def component_groups(self) -> dict[int, str]:
        """Planted group of every component: its category pool or "season"."""
        groups = {cid: "season" for cid in self.season_herbs.values()}
        for cat, pool in enumerate(self.pools):
            for cid in pool:
                groups[cid] = f"cat{cat}"
        return groups

    # -- the phenotype -> prescription function -------------------------

    def compose(self, ph: Phenotype) -> Record:
        """The noiseless prescription for a phenotype (deterministic)."""
        prof = self.profile_by_code(ph.primary_icd9)
        comps = list(prof.template)
        syn_a, syn_b = self.synonym_pairs[prof.category]
        if ph.sex == "female":
            comps = [syn_b if c == syn_a else c for c in comps]

        # age band steers the supporting components: geriatric and pediatric
        # variants substitute spare pool members for part of the body, while
        # the marker (rank 1) and the synonym slot (last) stay put
        last_body = len(comps) - 2
        if prof.alternates and ph.age >= 63:
            comps[1] = prof.alternates[0]
            if len(prof.alternates) > 1 and last_body >= 2:
                comps[2] = prof.alternates[1]
        elif prof.alternates and ph.age < 21:
            comps[last_body] = prof.alternates[0]

        z = prof.zipf_exponent
        if ph.secondary_icd9 != "0":
            sec = self.profile_by_code(ph.secondary_icd9)
            head = comps[:MIN_TEMPLATE]
            comps = head + [c for c in sec.template[:3] if c not in head]
            if ph.tertiary_icd9 != "0":
                ter = self.profile_by_code(ph.tertiary_icd9)
                extra = next((c for c in ter.template if c not in comps), None)
                if extra is not None:
                    comps.append(extra)
            # the flattened decay still lands every comorbid dose band clear
            # of both the single-disease bands and the other comorbid levels
            z *= 0.8

        doses = list(reconstruct_weights(z, MAX_DOSE_G, len(comps), rounded=True))
        pairs = list(zip(comps, doses))
        # seasonal additions carry a token dose below every template dose,
        # so the season reads off the amount rather than the position
        herb = self.season_herbs.get(ph.season)
        if herb is not None and herb not in comps:
            pairs.append((herb, WINTER_DOSE_G if ph.season == "winter" else SUMMER_DOSE_G))

        prescription = Prescription(
            components=tuple(pairs),
            acupuncture=prof.acupuncture,
            # serving schedule drifts with the calendar year of the visit
            schedule=(prof.schedule - 1 + 3 * ((ph.year or 0) % 9)) % 27 + 1,
            duration_days=duration_for_age(ph.age),
        )
        return Record(ph, prescription)

    def infer_primary(self, p: Prescription) -> str:
        """Marker lookup: the ground-truth inverse of compose.

        The primary disease is the one whose marker component carries the
        highest dose; the secondary's marker enters the merge at a strictly
        lower rank, so the lookup is exact on noiseless records whenever
        markers are unique (pools large enough for one per disease). If no
        marker is present (noise removed it), falls back to dose-weighted
        template overlap with synonyms normalized.
        """
        doses = dict(p.components)
        best_code, best_dose = None, 0.0
        for prof in self.profiles:
            dose = doses.get(prof.template[0], 0.0)
            if dose > best_dose:
                best_code, best_dose = prof.icd9, dose
        if best_code is not None:
            return best_code
        norm = {b: a for a, b in self.synonym_pairs.values()}
        scores = {norm.get(cid, cid): dose for cid, dose in p.components}
        best_code, best_score = self.profiles[0].icd9, -1.0
        for prof in self.profiles:
            score = sum(scores.get(cid, 0.0) for cid in prof.template)
            if score > best_score:
                best_code, best_score = prof.icd9, score
        return best_code

    # -- sampling -------------------------------------------------------

    def sample_phenotype(self, rng: np.random.Generator) -> Phenotype:
        d = int(rng.choice(self.config.n_diseases, p=self.popularity))
        prof = self.profiles[d]
        secondary = tertiary = "0"
        peers = [p for p in self.profiles if p.category == prof.category and p.disease_id != d]
        if peers and rng.random() < self.config.comorbidity_rate:
            sec = peers[int(rng.integers(len(peers)))]
            secondary = sec.icd9
            rest = [p for p in peers if p.disease_id != sec.disease_id]
            if rest and rng.random() < self.config.tertiary_rate:
                tertiary = rest[int(rng.integers(len(rest)))].icd9
        return Phenotype(
            primary_icd9=prof.icd9,
            secondary_icd9=secondary,
            tertiary_icd9=tertiary,
            sex="female" if rng.random() < 0.45 else "male",
            age=min(int(rng.triangular(0, 42, 105)), 104),
            month=int(rng.integers(1, 13)),
            year=int(rng.integers(0, 10)),
        )

    def apply_noise(self, record: Record, rng: np.random.Generator) -> Record:
        comps = list(record.prescription.components)
        present = {cid for cid, _ in comps}
        candidates = [c for c in self.components if c not in present]
        if not candidates:
            return record
        pos = int(rng.integers(len(comps)))
        new_id = candidates[int(rng.integers(len(candidates)))]
        comps[pos] = (new_id, comps[pos][1])
        return Record(record.phenotype, replace(record.prescription, components=tuple(comps)))


def generate_corpus(cfg: GeneratorConfig) -> tuple[list[Record], GroundTruth]:
    """Generate the full corpus for a config; deterministic under its seed."""
    truth = GroundTruth.build(cfg)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    records = []
    total = cfg.n_diseases * cfg.records_per_profile
    for _ in range(total):
        record = truth.compose(truth.sample_phenotype(rng))
        if cfg.noise_rate > 0.0 and rng.random() < cfg.noise_rate:
            record = truth.apply_noise(record, rng)
        records.append(record)
    return records, truth
