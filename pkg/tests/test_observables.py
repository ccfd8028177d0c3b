
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiltdiode.lindblad import DensityMatrix, ness
from tiltdiode.model import ModelParams
from tiltdiode.observables import (
    eigenbasis_decomposition,
    impurity,
    observables,
    osee,
    rectification,
    rectification_ratio,
)


def test_pure_product_state_has_zero_impurity_and_osee():
    m = np.zeros((16, 16))
    m[5, 5] = 1
    rho = DensityMatrix(m, 4)
    assert impurity(rho) == 0
    assert osee(rho) == pytest.approx(0, abs=1e-12)


def test_maximally_mixed_state():
    rho = DensityMatrix(np.eye(16) / 16, 4)
    assert impurity(rho) == pytest.approx(1 - 1 / 16)
    assert osee(rho) == pytest.approx(0, abs=1e-12)


def test_osee_of_bell_like_pair():
    # |psi> = (|01> + |10>)/sqrt2 on 2 sites: vec(rho) has operator Schmidt rank 4
    psi = np.zeros(4)
    psi[1] = psi[2] = 1 / np.sqrt(2)
    rho = DensityMatrix(np.outer(psi, psi), 2)
    assert osee(rho) == pytest.approx(2.0)


def test_rectification_ratio_flags_underflow():
    r, flag = rectification_ratio(1e-3, -1e-5)
    assert r == pytest.approx(100) and not flag
    r, flag = rectification_ratio(1e-3, 0.0)
    assert flag and r == pytest.approx(1e297)


@given(st.integers(2, 4), st.floats(0.05, 8))
def test_noninteracting_chain_does_not_rectify(n, e):
    res = rectification(ModelParams(n, tilt=e))
    assert res.ratio == pytest.approx(1, abs=1e-9)


@given(st.floats(0.1, 10), st.floats(0.5, 12))
def test_tilt_inversion_duality(d, e):
    fwd = rectification(ModelParams(4, interaction=d, tilt=e))
    rev = rectification(ModelParams(4, interaction=d, tilt=-e))
    assert abs(fwd.forward) == pytest.approx(abs(rev.reverse), rel=1e-8, abs=1e-14)


@given(st.floats(0, 8), st.floats(0, 12))
def test_eigenbasis_reassembly(d, e):
    p = ModelParams(4, interaction=d, tilt=e)
    rho = ness(p)
    dec = eigenbasis_decomposition(rho, p)
    assert dec.current == pytest.approx(observables(rho, p).current, abs=1e-12)
    assert dec.total_probability == pytest.approx(1, abs=1e-12)


def test_eigenbasis_rejects_bad_bond():
    p = ModelParams(4)
    with pytest.raises(ValueError):
        eigenbasis_decomposition(ness(p), p, bond=0)
    with pytest.raises(ValueError):
        rectification(p.replace(driving=0))
