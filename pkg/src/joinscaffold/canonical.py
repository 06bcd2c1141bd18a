"""Canonical JSON rendering shared by every exported document.

All documents the package emits (schema, graph, scaffold, decomposition,
report, trace) go through :func:`canonical_json` so outputs are diff-stable:
two-space indentation, keys in the order the emitting code constructs them,
arrays pre-sorted by the emitter, trailing newline.
"""

from __future__ import annotations

import json
from typing import Any


def canonical_json(obj: Any) -> str:
    """Render ``obj`` as canonical JSON text (two-space indent, trailing newline)."""
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
