from __future__ import annotations

import pytest

from gasketcalc import builtin
from gasketcalc.monomials import monomial_sequences

ALL_FRACTALS = ("sg", "sg3", "hg", "sg4")


@pytest.fixture(scope="session")
def fractals():
    return {name: builtin(name) for name in ALL_FRACTALS}


@pytest.fixture(scope="session")
def tables(fractals):
    """Monomial sequence tables at the reference degree, dual-route checked."""
    return {name: monomial_sequences(frac, 20) for name, frac in fractals.items()}
