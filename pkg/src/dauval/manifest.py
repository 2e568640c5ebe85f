"""Run manifests: enough of a record to reproduce every output byte."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from . import __version__

MANIFEST_FILENAME = "run_manifest.json"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    parameters: dict
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    tool_version: str = __version__
    created_utc: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    def add_input(self, path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def write(self, out_dir) -> None:
        path = out_dir / MANIFEST_FILENAME
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
