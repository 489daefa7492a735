"""Deterministic artifact writing: CSV, JSON, manifests with content hashes.

CSV rules: '.' decimal separator, no thousands separators, LF line endings,
mandatory header, floats via shortest round-trip repr, so files are bit-exact
across platforms and runs.
"""

import hashlib
import json
from pathlib import Path

import numpy as np


def fmt(value) -> str:
    """Shortest round-trip representation of a scalar."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    """Write rows (iterables of scalars) under a header, LF-terminated."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_json(path, obj):
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir, config, wall_time_s, version):
    """Manifest with the echoed config and a content hash per artifact.

    Wall time lives only in the manifest itself; all other artifacts are
    pure functions of (config, seeds).
    """
    out_dir = Path(out_dir)
    entries = []
    for p in sorted(out_dir.rglob("*")):
        if p.is_dir() or p.name == "manifest.json":
            continue
        entries.append({
            "path": str(p.relative_to(out_dir)),
            "sha256": sha256_file(p),
            "bytes": p.stat().st_size,
        })
    manifest = {
        "config": config,
        "tool_version": version,
        "wall_time_s": wall_time_s,
        "artifacts": entries,
    }
    write_json(out_dir / "manifest.json", manifest)
    return manifest


def parse_override(expr: str):
    """Split 'dotted.path=value' with the value parsed as JSON when possible."""
    if "=" not in expr:
        raise ValueError(f"override {expr!r} is not of the form path=value")
    key, raw = expr.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def set_by_path(config: dict, dotted: str, value):
    """Set config['a']['b']... = value for dotted path 'a.b....'."""
    parts = dotted.split(".")
    node = config
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value
