"""JSON artifact helpers.

Every JSON file the package emits carries a ``spec_version`` field so
downstream tooling can detect format changes.
"""

from __future__ import annotations

import json
from pathlib import Path

SPEC_VERSION = "1.0"


def write_json(path: str | Path, payload: dict) -> None:
    out = {"spec_version": SPEC_VERSION}
    out.update(payload)
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")


def read_json(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)
