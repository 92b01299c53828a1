"""Experiment configuration: one seed, typed sections, lossless file round-trip.

The file form is INI-style: one ``[section]`` per pipeline stage plus an
``[experiment]`` section holding the consolidated seed, the scale preset
name and the run directory. Every value is a typed scalar (int, float,
bool, str); floats are written with ``repr`` so parsing them back is
exact and ``load_config(save_config(cfg)) == cfg`` always holds.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import typing
from dataclasses import dataclass
from pathlib import Path


class HarnessError(ValueError):
    """Configuration, wiring, or pipeline-consistency failure."""


@dataclass(frozen=True)
class GeneratorSection:
    """Corpus synthesis knobs (seed and preset live in [experiment])."""

    n_components: int = 60
    n_diseases: int = 40
    n_categories: int = 5
    comorbidity_rate: float = 0.25
    tertiary_rate: float = 0.3
    noise_rate: float = 0.0
    acupuncture_diseases: int = 0
    records_per_profile: int = 500


@dataclass(frozen=True)
class BalanceSection:
    """Class flattening applied between gen-corpus and train-rcnn."""

    strategy: str = "uniform"  # uniform | medoid | none
    per_class_cap: int = 120
    sample_ceiling: int = 2048


@dataclass(frozen=True)
class RcnnSection:
    """Classifier training knobs; head sizes derive from the corpus."""

    learning_rate: float = 1e-2
    lr_halflife: int = 10
    batch_size: int = 128
    epochs: int = 24


@dataclass(frozen=True)
class ArnnSection:
    """Translator architecture and training knobs; vocabularies derive
    from the corpus."""

    layers: int = 2
    hidden: int = 96
    embedding: int = 48
    learning_rate: float = 4e-3
    lr_halflife: int = 6
    batch_size: int = 128
    epochs: int = 16
    beam_width: int = 1
    clip_norm: float = 5.0


@dataclass(frozen=True)
class AnalysisSection:
    """Spectral embedding, clustering and t-SNE knobs."""

    spectral_k: int = 8
    linkage: str = "average"  # single | complete | average
    cluster_on: str = "spectral"  # spectral | affinity
    cut_k: int = 5
    tsne_perplexity: float = 30.0
    tsne_iterations: int = 500
    tsne_out_dim: int = 2
    tsne_learning_rate: float = 0.0  # 0 = automatic (max(n/12, 50))


@dataclass(frozen=True)
class RoundtripSection:
    """Round-trip report scope and declared pass thresholds."""

    n_phenotypes: int = 500
    min_primary_match: float = 0.7
    min_chance_ratio: float = 10.0


_SECTION_TYPES: dict[str, type] = {
    "generator": GeneratorSection,
    "balance": BalanceSection,
    "rcnn": RcnnSection,
    "arnn": ArnnSection,
    "analysis": AnalysisSection,
    "roundtrip": RoundtripSection,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one pipeline run needs; a single seed governs every
    stochastic stage."""

    seed: int = 0
    preset: str = "desk"
    out: str = "runs/desk"
    generator: GeneratorSection = GeneratorSection()
    balance: BalanceSection = BalanceSection()
    rcnn: RcnnSection = RcnnSection()
    arnn: ArnnSection = ArnnSection()
    analysis: AnalysisSection = AnalysisSection()
    roundtrip: RoundtripSection = RoundtripSection()

    @classmethod
    def desk(cls, **overrides) -> "ExperimentConfig":
        """Laptop-scale preset: every acceptance bar is reachable on CPU."""
        return dataclasses.replace(cls(), **overrides)

    @classmethod
    def paper(cls, **overrides) -> "ExperimentConfig":
        """Full-scale preset mirroring the published architecture sizes."""
        base = cls(
            preset="paper",
            out="runs/paper",
            generator=GeneratorSection(
                n_components=718,
                n_diseases=909,
                n_categories=18,
                records_per_profile=20,
            ),
            rcnn=RcnnSection(learning_rate=1e-3, lr_halflife=0, batch_size=256,
                             epochs=50),
            arnn=ArnnSection(layers=3, hidden=512, embedding=256,
                             learning_rate=1e-3, lr_halflife=0, batch_size=64,
                             epochs=10),
        )
        return dataclasses.replace(base, **overrides)

    @classmethod
    def tiny(cls, **overrides) -> "ExperimentConfig":
        """Minutes-scale preset for pipeline smoke and determinism runs."""
        base = cls(
            preset="tiny",
            out="runs/tiny",
            generator=GeneratorSection(
                n_components=20,
                n_diseases=8,
                n_categories=3,
                records_per_profile=60,
            ),
            balance=BalanceSection(per_class_cap=40),
            rcnn=RcnnSection(epochs=2),
            arnn=ArnnSection(epochs=2),
            analysis=AnalysisSection(spectral_k=3, cut_k=3,
                                     tsne_perplexity=10.0,
                                     tsne_iterations=200),
            roundtrip=RoundtripSection(n_phenotypes=50),
        )
        return dataclasses.replace(base, **overrides)


_PRESETS = {
    "desk": ExperimentConfig.desk,
    "paper": ExperimentConfig.paper,
    "tiny": ExperimentConfig.tiny,
}


def preset_config(name: str) -> ExperimentConfig:
    try:
        return _PRESETS[name]()
    except KeyError:
        raise HarnessError(
            f"unknown preset {name!r}; choose from {sorted(_PRESETS)}"
        ) from None


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {int: int, float: float, str: str, bool: _parse_bool}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(cls: type, name: str, text: str, where: str):
    hints = typing.get_type_hints(cls)
    if name not in hints:
        raise HarnessError(f"unknown key {where}.{name}")
    parser = _PARSERS.get(hints[name])
    if parser is None:
        raise HarnessError(f"key {where}.{name} has unsupported type")
    try:
        return parser(text)
    except ValueError as exc:
        raise HarnessError(f"bad value for {where}.{name}: {exc}") from None


def config_to_text(config: ExperimentConfig) -> str:
    """Canonical file form; hashing this text identifies the experiment."""
    out = io.StringIO()
    out.write("[experiment]\n")
    out.write(f"seed = {config.seed}\n")
    out.write(f"preset = {config.preset}\n")
    out.write(f"out = {config.out}\n")
    for section, cls in _SECTION_TYPES.items():
        out.write(f"\n[{section}]\n")
        value = getattr(config, section)
        for field in dataclasses.fields(cls):
            out.write(f"{field.name} = {_format_value(getattr(value, field.name))}\n")
    return out.getvalue()


def config_from_text(text: str) -> ExperimentConfig:
    """Parse the file form; unknown sections or keys are errors, missing
    keys fall back to the named preset's defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise HarnessError(f"unparseable config: {exc}") from None

    known = {"experiment", *_SECTION_TYPES}
    for section in parser.sections():
        if section not in known:
            raise HarnessError(f"unknown config section [{section}]")

    experiment = dict(parser["experiment"]) if parser.has_section("experiment") else {}
    for key in experiment:
        if key not in ("seed", "preset", "out"):
            raise HarnessError(f"unknown key experiment.{key}")
    preset = experiment.get("preset", "desk")
    config = preset_config(preset)
    if "seed" in experiment:
        try:
            config = dataclasses.replace(config, seed=int(experiment["seed"]))
        except ValueError as exc:
            raise HarnessError(f"bad value for experiment.seed: {exc}") from None
    if "out" in experiment:
        config = dataclasses.replace(config, out=experiment["out"])

    for section, cls in _SECTION_TYPES.items():
        if not parser.has_section(section):
            continue
        current = getattr(config, section)
        updates = {
            key: _coerce(cls, key, raw, section)
            for key, raw in parser[section].items()
        }
        config = dataclasses.replace(
            config, **{section: dataclasses.replace(current, **updates)}
        )
    return config


def save_config(config: ExperimentConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config_to_text(config), encoding="utf-8")
    return path


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise HarnessError(f"cannot read config {path}: {exc}") from None
    return config_from_text(text)


def config_sha256(config: ExperimentConfig) -> str:
    return hashlib.sha256(config_to_text(config).encode("utf-8")).hexdigest()


def apply_override(config: ExperimentConfig, assignment: str) -> ExperimentConfig:
    """Apply one ``section.key=value`` override (``seed=3`` targets
    [experiment])."""
    if "=" not in assignment:
        raise HarnessError(f"override {assignment!r} is not key=value")
    key, _, raw = assignment.partition("=")
    key, raw = key.strip(), raw.strip()
    if "." not in key:
        key = f"experiment.{key}"
    section, _, name = key.partition(".")
    if section == "experiment":
        if name == "seed":
            return dataclasses.replace(config, seed=_coerce(
                ExperimentConfig, "seed", raw, "experiment"))
        if name == "preset":
            raise HarnessError("preset cannot be overridden; use --preset")
        if name == "out":
            return dataclasses.replace(config, out=raw)
        raise HarnessError(f"unknown key experiment.{name}")
    cls = _SECTION_TYPES.get(section)
    if cls is None:
        raise HarnessError(f"unknown config section [{section}]")
    value = _coerce(cls, name, raw, section)
    current = getattr(config, section)
    return dataclasses.replace(
        config, **{section: dataclasses.replace(current, **{name: value})}
    )
