"""Deterministic report serialization: JSON with 17-significant-digit floats.

The standard json encoder does not expose float formatting, so reports go through a
small recursive writer.  Output is bitwise-stable for a fixed manifest and build,
and every report embeds the manifest that produced it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["RunManifest", "dumps", "write_report", "format_float"]

TOOL_VERSION = "0.1.0"


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad_in}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad_in}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps(obj, indent: int = 2) -> str:
    """Serialize to JSON text with all floats at 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


@dataclass
class RunManifest:
    """Reproducibility record embedded in every emitted report."""

    command: str
    inputs: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    seed: int = 0
    version: str = TOOL_VERSION

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "config": self.config,
            "outputs": list(self.outputs),
            "seed": self.seed,
            "version": self.version,
        }


def write_report(path, payload: dict, manifest: RunManifest):
    """Write a JSON report with the manifest embedded under 'manifest'."""
    doc = {"manifest": manifest.to_dict()}
    doc.update(payload)
    with open(path, "w") as fh:
        fh.write(dumps(doc))
