"""Counter-based random streams.

Every stochastic routine takes an explicit seed plus optional keys; the
stream is a Philox generator keyed by ``SeedSequence([seed, *keys])`` so a
given (seed, keys) pair always yields the same numbers regardless of call
order or thread count.
"""

import hashlib

import numpy as np


def _key_to_int(key):
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"stream keys must be non-negative, got {key}")
        return int(key)
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed, *keys):
    """Return an independent ``numpy.random.Generator`` for ``(seed, *keys)``."""
    words = [_key_to_int(seed)] + [_key_to_int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def generator_state(rng):
    """JSON-serialisable snapshot of a generator's bit-generator state."""
    state = rng.bit_generator.state
    return _to_jsonable(state)


def restore_generator(state):
    rng = np.random.Generator(np.random.Philox())
    rng.bit_generator.state = _from_jsonable(state)
    return rng


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _from_jsonable(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["__ndarray__"], dtype=obj["dtype"])
        return {k: _from_jsonable(v) for k, v in obj.items()}
    return obj
