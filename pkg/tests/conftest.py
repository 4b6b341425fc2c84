import math

import numpy as np
import pytest

from ifprep.amplitudes import InteractionAmplitudes


def random_amplitudes(rng: np.random.Generator, real_s0: bool = False, n_inel: int = 2):
    """Random valid amplitude set with purely imaginary s0 unless real_s0."""
    weights = rng.dirichlet(np.ones(n_inel + 3))
    # last weight is the survival probability c^2
    p_fwd, p_abs, *p_inel = weights[:-1]
    phase = rng.uniform(0, 2 * np.pi)
    s0 = complex(math.sqrt(p_fwd), 0) if real_s0 else complex(0, math.copysign(math.sqrt(p_fwd), rng.uniform(-1, 1)))
    return InteractionAmplitudes(
        s0=s0,
        s_inel=tuple(math.sqrt(p) * np.exp(1j * rng.uniform(0, 2 * np.pi)) for p in p_inel),
        z=math.sqrt(p_abs) * np.exp(1j * phase),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)
