import math
import random

import pytest


def random_substrate_value(rng: random.Random, emin: int = -60, emax: int = 60) -> float:
    """A random finite binary64 value with full 52-bit mantissa entropy."""
    mantissa = rng.getrandbits(52)
    exponent = rng.randint(emin, emax)
    sign = -1.0 if rng.random() < 0.5 else 1.0
    return sign * math.ldexp(1.0 + mantissa * 2.0 ** -52, exponent)


def random_substrate_values(seed: int, count: int, emin: int = -60, emax: int = 60):
    rng = random.Random(seed)
    return [random_substrate_value(rng, emin, emax) for _ in range(count)]


@pytest.fixture
def py_rng():
    return random.Random(0xC0FFEE)
