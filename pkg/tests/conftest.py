import random

import pytest

from q2sat import fieldarith as fa
from q2sat import model


@pytest.fixture(scope="session")
def Q():
    return fa.rational_field()


@pytest.fixture(scope="session")
def QI():
    return fa.gaussian_field()


@pytest.fixture(scope="session")
def SQRT2():
    """Base field Q[sqrt(2)] (degree-2 real embedding)."""
    return fa.base_level((-2, 0, 1), (1, 2, 0, 0))


def make_instance(n, triples, level=None):
    """Build an instance from (u, v, eta-int-4-tuple) triples over Q."""
    level = level or fa.rational_field()
    cs = []
    for (u, v, eta) in triples:
        cs.append(model.Constraint(len(cs), u, v, tuple(level.from_int(x) for x in eta)))
    return model.Instance(n, cs, level)


def random_nonzero_eta(rng: random.Random, level, bound=2):
    while True:
        eta = tuple(level.from_int(rng.randint(-bound, bound)) for _ in range(4))
        if not all(x.is_zero() for x in eta):
            return eta


def random_state(rng: random.Random, level, bound=3):
    while True:
        v = (level.from_int(rng.randint(-bound, bound)), level.from_int(rng.randint(-bound, bound)))
        if not (v[0].is_zero() and v[1].is_zero()):
            return v
