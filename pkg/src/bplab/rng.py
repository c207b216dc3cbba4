"""Counter-based random streams keyed by (seed, instance).

Every random draw in the library goes through :func:`stream`, so a result
depends only on the experiment seed and a stable description of the
instance, never on evaluation order or thread count.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o).__name__}")


def instance_hash(obj) -> str:
    """Hex sha256 of the canonical JSON form of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def stream(seed: int, *keys) -> np.random.Generator:
    """Independent Philox stream for ``seed`` and any JSON-able keys."""
    digest = hashlib.sha256(canonical_json(list(keys)).encode()).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(words))
    return np.random.Generator(np.random.Philox(ss))
