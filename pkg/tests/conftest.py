import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_simplified_states(rng, n, h_range=(0.5, 2.0), u_range=(0.6, 2.5)):
    """Admissible 2x2-model states drawn well inside the hyperbolic region."""
    h = rng.uniform(*h_range, size=n)
    u = rng.uniform(*u_range, size=n)
    w = np.stack([h, h * u], axis=-1)
    return w


def random_shallow_water_states(rng, n, g=9.81):
    h = rng.uniform(0.5, 2.0, size=n)
    # keep away from the resonant |u| = c line
    fr = np.concatenate(
        [rng.uniform(0.0, 0.7, size=n // 2), rng.uniform(1.3, 2.0, size=n - n // 2)]
    )
    sign = rng.choice([-1.0, 1.0], size=n)
    q = sign * fr * h * np.sqrt(g * h)
    sigma = rng.uniform(-1.0, 1.0, size=n)
    return np.stack([h, q, sigma], axis=-1)


def random_two_layer_states(rng, n, g=9.81, r=0.95, max_shear=0.5):
    """Hyperbolic two-layer states: bounded interfacial shear, rest-heavy."""
    h1 = rng.uniform(0.3, 1.5, size=n)
    h2 = rng.uniform(0.3, 1.5, size=n)
    gprime = (1.0 - r) * g
    du = rng.uniform(-1.0, 1.0, size=n) * np.sqrt(max_shear * gprime * (h1 + h2))
    ubar = rng.uniform(-0.3, 0.3, size=n)
    u1 = ubar + 0.5 * du
    u2 = ubar - 0.5 * du
    return np.stack([h1, h1 * u1, h2, h2 * u2], axis=-1)
