"""Random expression trees for property tests."""

import random

from skewfree.field_tower import QTY, T, Y
from skewfree.ncexpr import X, add, inverse, mul, neg, power, scalar
from skewfree.skew_series import random_elem


def random_coefficient(rng: random.Random, level: str):
    while True:
        c = random_elem(rng, level, degree=1, height=2)
        if not c.is_zero():
            return c


def random_tree(rng: random.Random, level: str, depth: int = 2):
    """A small tree whose inverses are always of units of the series field."""
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.4:
            return X
        if r < 0.55 and level == QTY:
            return scalar(Y)
        return scalar(random_coefficient(rng, level))
    kind = rng.choice(["sum", "prod", "prod", "inv", "neg", "pow"])
    if kind == "sum":
        return add(random_tree(rng, level, depth - 1), random_tree(rng, level, depth - 1))
    if kind == "prod":
        return mul(random_tree(rng, level, depth - 1), random_tree(rng, level, depth - 1))
    if kind == "neg":
        return neg(random_tree(rng, level, depth - 1))
    if kind == "pow":
        return power(X, rng.choice([-2, -1, 2]))
    # invert a binomial c0 + c1 X, which is a unit for c1 != 0
    c0 = random_coefficient(rng, level) if rng.random() < 0.7 else T
    return inverse(add(scalar(c0), mul(scalar(random_coefficient(rng, level)), X)))
