"""Pure-Python kernels. Bit-identical to the compiled ``_kernels`` module."""

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_INV53 = 1.0 / (1 << 53)


def fnv1a64(data):
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & MASK64
    return h


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def uniform(seed, counter):
    """Draw number ``counter`` (0-based) of the splitmix64 stream ``seed``, in [0, 1)."""
    z = mix64((seed + (counter + 1) * GOLDEN) & MASK64)
    return (z >> 11) * _INV53


def bernoulli_hits(seed, counter, probs):
    """One trial per entry of ``probs`` using consecutive draws; returns hit indices."""
    hits = []
    for i, p in enumerate(probs):
        z = mix64((seed + (counter + i + 1) * GOLDEN) & MASK64)
        if (z >> 11) * _INV53 < p:
            hits.append(i)
    return hits
