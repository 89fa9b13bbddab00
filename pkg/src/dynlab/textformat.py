"""Plain-text ``key = value`` files with ``[section]`` headers.

Keys inside a section are stored as ``section.key``. Keys before the first
header are stored bare. ``#`` starts a comment line.
"""
from __future__ import annotations


def parse(text: str) -> dict:
    out: dict = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip()
        if section:
            key = f"{section}.{key}"
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def serialize(data: dict) -> str:
    """Inverse of :func:`parse`; keys are grouped by their first dotted part."""
    bare = {k: v for k, v in data.items() if "." not in k}
    groups: dict = {}
    for k, v in data.items():
        if "." in k:
            sec, rest = k.split(".", 1)
            groups.setdefault(sec, {})[rest] = v
    lines = [f"{k} = {bare[k]}" for k in sorted(bare)]
    for sec in sorted(groups):
        if lines:
            lines.append("")
        lines.append(f"[{sec}]")
        lines.extend(f"{k} = {groups[sec][k]}" for k in sorted(groups[sec]))
    return "\n".join(lines) + "\n"
