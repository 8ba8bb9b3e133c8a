#!/usr/bin/env python3
"""Bump the chiral-circulator version in pyproject.toml and _version.py."""

import re
import sys
from pathlib import Path

VERSION_PATTERN = re.compile(r"^\d+\.\d+\.\d+(?:(?:a|b|rc)\d+)?$")

TARGETS = {
    Path("pyproject.toml"): r'^version = "[^"]*"',
    Path("src/chiral_circulator/_version.py"): r'^__version__ = "[^"]*"',
}


def _replace_first(path: Path, pattern: str, new_version: str) -> None:
    content = path.read_text()
    prefix = pattern.split(" = ")[0].lstrip("^")
    updated, count = re.subn(
        pattern, f'{prefix} = "{new_version}"', content, count=1, flags=re.MULTILINE
    )
    if count != 1:
        raise SystemExit(f"No version line found in {path}")
    path.write_text(updated)
    print(f"{path}: {new_version}")


def update_version(new_version: str) -> None:
    if not VERSION_PATTERN.match(new_version):
        raise SystemExit(f"Not a release version: {new_version!r}")
    for path, pattern in TARGETS.items():
        _replace_first(path, pattern, new_version)


if __name__ == "__main__":
    if len(sys.argv) != 2:
        print("Usage: python scripts/update_version.py <version>")
        sys.exit(1)
    update_version(sys.argv[1])
