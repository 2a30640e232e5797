"""SplitMix64, the single source of randomness for traces, placement and failures.

One 64-bit draw per random decision keeps every run reproducible from its
seed regardless of which engine executes it.
"""

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MUL1 = 0xBF58476D1CE4E5B9
MUL2 = 0x94D049BB133111EB

_INV_2_53 = 1.0 / (1 << 53)


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MUL1) & MASK64
        z = ((z ^ (z >> 27)) * MUL2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Float in [0, 1) from the top 53 bits of one draw."""
        return (self.next() >> 11) * _INV_2_53

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi], both inclusive."""
        return lo + self.next() % (hi - lo + 1)


def placement_seed(seed: int) -> int:
    """Seed of the random-placement stream, decorrelated from the failure stream."""
    return SplitMix64(seed).next()
