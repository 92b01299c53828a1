"""Run-directory plumbing: staged output files and a content-hash manifest.

Every subcommand writes its outputs through a stage context. On success
the stage hashes each produced file into ``manifest.json``; on failure it
deletes whatever it had produced so a crashed stage never leaves partial
outputs behind. The manifest is plain JSON with sorted keys and no
timestamps, so byte-identical pipelines produce byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .config import HarnessError

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Stage:
    """Context manager collecting one subcommand's output files."""

    def __init__(self, run: "RunDir", name: str):
        self.run = run
        self.name = name
        self._paths: list[Path] = []

    def path(self, relative: str) -> Path:
        """Register (and return) an output path under the run directory."""
        target = self.run.root / relative
        if not target.resolve().is_relative_to(self.run.root.resolve()):
            raise HarnessError(f"output path {relative!r} escapes the run directory")
        target.parent.mkdir(parents=True, exist_ok=True)
        self._paths.append(target)
        return target

    def __enter__(self) -> "Stage":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is not None:
            for path in self._paths:
                path.unlink(missing_ok=True)
            return False
        produced = [p for p in self._paths if p.exists()]
        self.run._record(self.name, produced)
        return False


class RunDir:
    """One experiment's output directory plus its manifest."""

    def __init__(self, root: str | Path, config_sha256: str | None = None,
                 seed: int | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.root / MANIFEST_NAME
        manifest = self._load()
        if config_sha256 is not None:
            manifest["config_sha256"] = config_sha256
        if seed is not None:
            manifest["seed"] = seed
        self._manifest = manifest
        self._write()

    def stage(self, name: str) -> Stage:
        return Stage(self, name)

    @property
    def manifest(self) -> dict:
        return json.loads(json.dumps(self._manifest))

    def file_hash(self, relative: str) -> str | None:
        return self._manifest["files"].get(relative)

    def _load(self) -> dict:
        if self.manifest_path.exists():
            try:
                manifest = json.loads(self.manifest_path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise HarnessError(
                    f"corrupt manifest {self.manifest_path}: {exc}") from None
            manifest.setdefault("files", {})
            manifest.setdefault("stages", {})
            return manifest
        return {"config_sha256": None, "seed": None, "files": {}, "stages": {}}

    def _record(self, stage: str, paths: list[Path]) -> None:
        relatives = sorted(str(p.relative_to(self.root)) for p in paths)
        for rel in relatives:
            self._manifest["files"][rel] = sha256_file(self.root / rel)
        self._manifest["stages"][stage] = relatives
        self._write()

    def _write(self) -> None:
        ordered = {
            "config_sha256": self._manifest.get("config_sha256"),
            "seed": self._manifest.get("seed"),
            "files": dict(sorted(self._manifest["files"].items())),
            "stages": dict(sorted(self._manifest["stages"].items())),
        }
        tmp = self.manifest_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(ordered, indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")
        tmp.replace(self.manifest_path)
        self._manifest = ordered
