"""Counter-based random streams.

Every stream is a splitmix64 sequence identified by a 64-bit seed; its full
state is ``(seed, counter)``, which makes engine states cheap to serialize and
identical across platforms and kernel backends.

Stream splitting: the seed of a named stream is
``mix64(fnv1a64("/".join(parts)))``, e.g. ``("episode", 7, 3, "red")`` for the
red stream of scenario seed 7, episode seed 3.
"""

from . import kernels


def derive_seed(*parts) -> int:
    key = "/".join(str(p) for p in parts).encode("utf-8")
    return kernels.mix64(kernels.fnv1a64(key))


class Stream:
    __slots__ = ("seed", "counter")

    def __init__(self, seed: int, counter: int = 0):
        self.seed = seed & 0xFFFFFFFFFFFFFFFF
        self.counter = counter

    @classmethod
    def named(cls, *parts) -> "Stream":
        return cls(derive_seed(*parts))

    def random(self) -> float:
        u = kernels.uniform(self.seed, self.counter)
        self.counter += 1
        return u

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange() needs n >= 1")
        return min(int(self.random() * n), n - 1)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        return lo + self.randrange(hi - lo + 1)

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def weighted_index(self, weights) -> int:
        total = float(sum(weights))
        u = self.random() * total
        acc = 0.0
        last = 0
        for i, w in enumerate(weights):
            if w <= 0:
                continue
            acc += w
            last = i
            if u < acc:
                return i
        return last

    def bernoulli_hits(self, probs) -> list:
        """Independent trials for each probability; consumes ``len(probs)`` draws."""
        hits = kernels.bernoulli_hits(self.seed, self.counter, probs)
        self.counter += len(probs)
        return hits

    def state(self) -> list:
        return [self.seed, self.counter]

    def copy(self) -> "Stream":
        return Stream(self.seed, self.counter)

    def __eq__(self, other):
        return isinstance(other, Stream) and self.state() == other.state()

    def __repr__(self):
        return f"Stream(seed={self.seed:#x}, counter={self.counter})"
