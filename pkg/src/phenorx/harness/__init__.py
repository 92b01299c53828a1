"""Experiment orchestration: config files, run directories, the CLI, and
the translate-then-classify round-trip check."""

from .config import (AnalysisSection, ArnnSection, BalanceSection,
                     ExperimentConfig, GeneratorSection, HarnessError,
                     RcnnSection, RoundtripSection, apply_override,
                     config_from_text, config_sha256, config_to_text,
                     load_config, preset_config, save_config)
from .roundtrip import (ROUNDTRIP_HEADS, RoundTripReport, RoundTripRow,
                        roundtrip_check)
from .rundir import RunDir, sha256_file

__all__ = [
    "AnalysisSection",
    "ArnnSection",
    "BalanceSection",
    "ExperimentConfig",
    "GeneratorSection",
    "HarnessError",
    "RcnnSection",
    "ROUNDTRIP_HEADS",
    "RoundTripReport",
    "RoundTripRow",
    "RoundtripSection",
    "RunDir",
    "apply_override",
    "config_from_text",
    "config_sha256",
    "config_to_text",
    "load_config",
    "preset_config",
    "roundtrip_check",
    "save_config",
    "sha256_file",
]
