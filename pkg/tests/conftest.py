import random
from fractions import Fraction

import pytest

from dialaride.harness import random_instance


@pytest.fixture
def rng():
    return random.Random(20240601)


def small_instances(count, seed, space="line", n_max=4):
    rng = random.Random(seed)
    return [random_instance(rng, space, n_max, 2) for _ in range(count)]


F = Fraction
