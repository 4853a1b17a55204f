"""Deterministic 64-bit seed mixing (splitmix64 finalizer)."""

_MASK = (1 << 64) - 1


def _splitmix(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed; order-sensitive and platform-stable."""
    h = 0x6A09E667F3BCC909
    for p in parts:
        h = _splitmix(h ^ (int(p) & _MASK))
    return h
