"""Bit-stable JSON helpers for complex matrices and config hashing.

Complex matrices are stored as flat row-major lists of ``[re, im]`` pairs.
Floats go through Python's shortest round-trip repr, so a write/read cycle
reproduces the array bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from .qla import CMatrix


def matrix_to_pairs(m: CMatrix) -> list[list[float]]:
    """Flatten a complex matrix to row-major ``[re, im]`` pairs."""
    flat = np.asarray(m, dtype=np.complex128).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def pairs_to_matrix(pairs: list[list[float]], rows: int, cols: int) -> CMatrix:
    """Rebuild a complex matrix from row-major ``[re, im]`` pairs."""
    if len(pairs) != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, got {len(pairs)}")
    flat = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    return flat.reshape(rows, cols)


def canonical_dumps(obj: Any) -> str:
    """Deterministic single-line JSON: sorted keys, no whitespace padding."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj: Any) -> str:
    """Stable 16-hex-digit digest of a JSON-serializable object."""
    return hashlib.sha256(canonical_dumps(obj).encode("utf-8")).hexdigest()[:16]
