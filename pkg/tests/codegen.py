"""Seeded random Borel codes with known syntactic levels, cylinders of length <= 3 over {0,1,2}."""
from bairespace.borel import Basic, Complement, Union, finite_union


def random_cylinder(rng, depth=3, branch=3):
    return Basic(tuple(rng.randrange(branch) for _ in range(rng.randint(1, depth))))


def random_clopen(rng, depth=3, branch=3):
    roll = rng.random()
    if roll < 0.5:
        return random_cylinder(rng, depth, branch)
    if roll < 0.75:
        return Complement(random_cylinder(rng, depth, branch))
    return finite_union([random_cylinder(rng, depth, branch) for _ in range(rng.randint(1, 3))])


def random_pi(rng, level, depth=3, branch=3):
    """A code of Pi level <= level (level 0 means clopen)."""
    if level == 0 or rng.random() < 0.2:
        return random_clopen(rng, depth, branch)
    return Complement(random_sigma(rng, level, depth, branch))


def random_sigma(rng, level, depth=3, branch=3, width=(1, 3)):
    """A countable-style union of children of Pi level < level."""
    kids = [random_pi(rng, rng.randint(0, level - 1), depth, branch) for _ in range(rng.randint(*width))]
    return Union(tuple(kids))


def random_family(rng, xi, size=(1, 3), depth=3, branch=3):
    """Members are unions of children of Pi level <= xi (Sigma level xi + 1)."""
    return [Union(tuple(random_pi(rng, xi, depth, branch) for _ in range(rng.randint(1, 3))))
            for _ in range(rng.randint(*size))]
