"""Random systems shared by the property tests."""
from __future__ import annotations

import random

from bihom.forms import make_system


def random_exponent(rng: random.Random, n: int, d: int) -> list[int]:
    e = [0] * n
    for _ in range(d):
        e[rng.randrange(n)] += 1
    return e


def random_system(rng: random.Random, max_R: int = 2, max_n: int = 4, max_total_degree: int = 4,
                  linear_y: bool = False, coeff: int = 3):
    """A random integral system with ``d1 + d2 <= max_total_degree``."""
    R = rng.randint(1, max_R)
    n1 = rng.randint(1, max_n)
    n2 = rng.randint(1, max_n)
    d1 = rng.randint(1, max_total_degree - 1)
    d2 = 1 if linear_y else rng.randint(1, max_total_degree - d1)
    forms = []
    for _ in range(R):
        mons = [(rng.randint(-coeff, coeff) or 1, random_exponent(rng, n1, d1),
                 random_exponent(rng, n2, d2)) for _ in range(rng.randint(1, 4))]
        forms.append(mons)
    return make_system(forms, R, n1, n2, d1, d2)


def random_vector(rng: random.Random, n: int, bound: int = 5) -> tuple[int, ...]:
    return tuple(rng.randint(-bound, bound) for _ in range(n))
