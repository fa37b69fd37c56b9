from fractions import Fraction as Q
from pathlib import Path

import pytest

from pwtrans.exact import Branch1, Interval1, ItmSpec

SPECS = Path(__file__).resolve().parent.parent / "specs"


def itm(*branches, omega=(0, 1), mode="line"):
    return ItmSpec(
        Interval1(Q(omega[0]), Q(omega[1])),
        tuple(Branch1(Interval1(Q(lo), Q(hi)), Q(v)) for (lo, hi), v in branches),
        mode,
    )


@pytest.fixture
def derived():
    """Omega=[0,1]; [0,1/2] -> +1/4, [1/2,1] -> -1/2.  Attractor [0,3/4] at N=1."""
    return itm(((0, Q(1, 2)), Q(1, 4)), ((Q(1, 2), 1), Q(-1, 2)))


@pytest.fixture
def halfswap():
    return itm(((0, Q(1, 2)), Q(1, 2)), ((Q(1, 2), 1), Q(-1, 2)))


@pytest.fixture
def specs_dir():
    return SPECS
