import numpy as np
import pytest

from relaxor import Params, assemble_singular_orbit, solve_jump_points

# benchmark jump coordinates (two-decimal reference values):
# (r, m), A = (p1A, p2A, zA), B = (p1B, p2B, zB)
REFERENCE_ORBITS = {
    "predpreyprey": ((0.8, 1.0), (2.41, 0.33, 1.18), (0.29, 2.27, 1.39)),
    "predp2": ((0.5, 0.4), (4.27, 0.19, 0.70), (0.06, 2.69, 0.85)),
    "clockwise": ((0.5, 0.4), (0.97, 0.81, 2.00), (0.22, 4.28, 0.85)),
    "hybrid": ((0.5, 0.4), (1.81, 0.49, 1.35), (0.51, 1.59, 1.40)),
}

# pure prey-prey antiphase member at (r, m) = (0.5, 0.4); no predator
# extremum at the upward jump because p1A and p2A both sit below 1
ANTIPHASE_SEED = {"pin": {"p1A": 0.99, "zA": 1.75},
                  "guess": {"p2A": 0.9837, "zB": 1.1186}}

# zero-net-trait-pressure member at (0.5, 0.4): the orbit small-eps
# simulations settle onto (see orbit.trait_pressure_balance)
BALANCED_GUESS = {"p1A": 1.218, "p2A": 0.811,
                  "zA": 1.48624943, "zB": 1.48624943}


def solve_reference_orbit(name):
    (r, m), a, b = REFERENCE_ORBITS[name]
    p = Params(r, m)
    pair = solve_jump_points({"p1A": a[0], "zA": a[2]},
                             {"p2A": a[1], "zB": b[2]}, p)
    return p, pair


@pytest.fixture(scope="session")
def params_default():
    return Params(0.5, 0.4)


@pytest.fixture(scope="session")
def reference_pairs():
    """Solved jump pairs for the four benchmark orbits."""
    return {name: solve_reference_orbit(name) for name in REFERENCE_ORBITS}


@pytest.fixture(scope="session")
def reference_orbits(reference_pairs):
    """Assembled singular orbits for the four benchmark orbits."""
    return {name: (p, pair, assemble_singular_orbit(pair, p))
            for name, (p, pair) in reference_pairs.items()}


@pytest.fixture(scope="session")
def antiphase_orbit():
    p = Params(0.5, 0.4)
    pair = solve_jump_points(ANTIPHASE_SEED["pin"], ANTIPHASE_SEED["guess"], p)
    return p, pair, assemble_singular_orbit(pair, p)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
