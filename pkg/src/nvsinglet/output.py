"""Deterministic CSV/JSON writers with embedded run configuration."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

from . import __version__


def canonical_json(obj):
    """Key-sorted compact JSON; identical objects give identical strings."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_hash(config: dict):
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def table_text(header, rows, config=None):
    """CSV text; with ``config`` two ``#`` comment lines carry it and its hash."""
    buf = io.StringIO()
    if config is not None:
        buf.write(f"# config_sha256: {config_hash(config)}\n")
        buf.write(f"# config: {canonical_json(config)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def table_json(header, rows, config=None):
    doc = {"columns": list(header), "rows": [[_json_value(v) for v in r] for r in rows]}
    if config is not None:
        doc["config"] = config
        doc["config_sha256"] = config_hash(config)
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


class RunWriter:
    """Collects output files of one command and finishes with ``meta.json``."""

    def __init__(self, out_dir, command, config, fmt="csv"):
        self.out = Path(out_dir)
        self.command = command
        self.config = config
        self.fmt = fmt
        self.files = {}
        self.extra = {}
        self.out.mkdir(parents=True, exist_ok=True)

    def _write(self, name, text):
        path = self.out / name
        path.write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def table(self, stem, header, rows):
        rows = list(rows)
        if self.fmt == "json":
            return self._write(stem + ".json", table_json(header, rows, self.config))
        return self._write(stem + ".csv", table_text(header, rows, self.config))

    def text(self, name, text):
        return self._write(name, text)

    def finish(self):
        meta = {
            "command": self.command,
            "version": __version__,
            "config": self.config,
            "config_sha256": config_hash(self.config),
            "files": dict(sorted(self.files.items())),
        }
        meta.update(self.extra)
        meta["content_sha256"] = hashlib.sha256(canonical_json(meta).encode()).hexdigest()
        (self.out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
        return meta
