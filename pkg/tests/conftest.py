import numpy as np
import pytest

from frdecomp.mollifier import (BumpProfile, build_mollifier, default_mollifier,
                                normalization_constant)
from frdecomp.weights import ContinuousWeightFamily, DiscreteWeightFamily


def exp_bump(beta=1.0, half_width=0.5):
    """Admissible bump exp(-beta/(hw^2 - s^2)); beta=1 is the package default."""
    r2 = half_width * half_width

    def eval_bump(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < half_width
        si = s[inside]
        out[inside] = np.exp(-beta / (r2 - si * si))
        return out

    return BumpProfile(half_width=half_width, eval=eval_bump)


@pytest.fixture(scope="session")
def mollifier():
    return default_mollifier()


@pytest.fixture(scope="session")
def norm1(mollifier):
    return normalization_constant(mollifier, gamma=1.0)


@pytest.fixture(scope="session")
def cont_family(mollifier, norm1):
    return ContinuousWeightFamily(mollifier, norm1)


@pytest.fixture(scope="session")
def disc_family(mollifier, norm1):
    return DiscreteWeightFamily(mollifier, norm1)


@pytest.fixture(scope="session")
def narrow_mollifier():
    # Spatially narrower phi: the scale window t in [4, 32] of the decay and
    # gap measurements is asymptotic for this profile (see decisions notes).
    return build_mollifier(exp_bump(beta=0.35))


@pytest.fixture(scope="session")
def narrow_norm(narrow_mollifier):
    return normalization_constant(narrow_mollifier, gamma=1.0)
