"""Run manifests: the reproducibility record each stage writes beside its artifacts.

A manifest carries the config hash, the seed, tool versions and output counts,
and deliberately nothing time- or path-dependent, so byte-identical runs
produce byte-identical manifests.
"""

from __future__ import annotations

import json
import platform
from pathlib import Path

import numpy
import PIL


def tool_versions(media_tool: str | None = None, ocr_engine: str | None = None) -> dict:
    """Version record of everything that shaped the artifacts."""
    from . import __version__

    versions = {
        "vitalcast": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "pillow": PIL.__version__,
    }
    if media_tool is not None:
        versions["media_tool"] = media_tool
    if ocr_engine is not None:
        versions["ocr_engine"] = ocr_engine
    return versions


def build_manifest(
    stage: str,
    config_hash: str,
    seed: int,
    counts: dict,
    versions: dict | None = None,
    extra: dict | None = None,
) -> dict:
    manifest = {
        "stage": stage,
        "config_hash": config_hash,
        "seed": seed,
        "versions": versions or tool_versions(),
        "counts": counts,
    }
    if extra:
        manifest.update(extra)
    return manifest


def write_manifest(path: str | Path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
