"""Run provenance: config digests and version/back-end stamps."""

from __future__ import annotations

import hashlib
from typing import Mapping

from . import _accel


def config_digest(settings: Mapping[str, object]) -> str:
    """Stable short hash of a flat settings mapping."""
    lines = "\n".join(f"{k}={settings[k]!r}" for k in sorted(settings))
    return hashlib.sha256(lines.encode()).hexdigest()[:16]


def run_stamp(settings: Mapping[str, object]) -> dict[str, str]:
    from . import __version__

    return {
        "config_hash": config_digest(settings),
        "code_version": __version__,
        "backend": _accel.backend_name(),
    }
