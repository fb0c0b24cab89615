"""Serialisation of reports, CSV rows and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import ValidationError

SCHEMA_VERSION = 1


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(obj):
    # non-finite floats become strings so the output stays strict JSON
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_, np.ndarray)):
        return _clean(_default(obj))
    return obj


def dumps(obj) -> str:
    """Pretty-printed JSON with sorted keys and a trailing newline."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, ensure_ascii=False, default=_default, allow_nan=False) + "\n"


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def write_text(path, text: str) -> str:
    data = text.encode("utf-8")
    Path(path).write_bytes(data)
    return sha256_bytes(data)


def load_json_arg(source: str, what: str = "config") -> dict:
    """Parse a JSON object from a file path or an inline string."""
    text = source
    if not source.lstrip().startswith("{"):
        p = Path(source)
        if not p.is_file():
            raise ValidationError(f"{what} file {source!r} not found")
        text = p.read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid {what} JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"{what} must be a JSON object")
    return obj


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    version: str
    command: str
    config: dict
    seeds: list
    threads: int
    started: str = ""
    finished: str = ""
    outputs: dict = field(default_factory=dict)
    runtime: float | None = None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "tool": "rangecap",
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "seeds": list(self.seeds),
            "threads": self.threads,
            "started": self.started,
            "finished": self.finished,
            "runtime_seconds": self.runtime,
            "outputs": dict(self.outputs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(
            d["version"], d["command"], d["config"], d["seeds"], d["threads"],
            d.get("started", ""), d.get("finished", ""), d.get("outputs", {}), d.get("runtime_seconds"),
        )

    def verify(self, directory) -> bool:
        """True when every recorded digest matches the file on disk."""
        d = Path(directory)
        return all((d / name).is_file() and sha256_file(d / name) == digest for name, digest in self.outputs.items())


def write_outputs(out_dir, files: dict, manifest: RunManifest) -> Path:
    """Write ``files`` (name -> text) and the manifest recording their digests."""
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    for name, text in files.items():
        manifest.outputs[name] = write_text(out / name, text)
    write_text(out / "manifest.json", dumps(manifest.to_dict()))
    return out
