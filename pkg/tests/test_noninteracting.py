import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import correlation_matrix, landauer_current

from tiltdiode.lindblad import ness
from tiltdiode.model import ModelParams
from tiltdiode.noninteracting import (
    analytic_reference,
    assemble_system,
    ballistic_current,
    profile,
    solve_chain,
    unknown_count,
)
from tiltdiode.observables import observables

# Independent transmission-integral values (tests/oracles.py, 80 digits), V = E N = 6
LANDAUER_V6 = {100: 5.93137181380285e-13, 150: 7.68500026932564e-18}


def test_unknown_count_n4():
    # a1, a2, b2, h(2,1), h(2,2), h(3,1), b(3,1), h(4,1), b(4,1)
    assert unknown_count(4) == 9
    assert assemble_system(4, 1.0).matrix.shape == (9, 9)


@pytest.mark.parametrize("n", [2, 3, 4, 7, 12, 50, 200])
def test_ballistic_current_at_zero_tilt(n):
    c = solve_chain(n, 0.0)
    assert c.current == pytest.approx(2 / 17, abs=1e-12)
    assert ballistic_current(1, 1) == pytest.approx(2 / 17)


# the Lyapunov route loses accuracy once V = E N is large (exponentially slow
# modes), so it is sampled at moderate V; deep insulators use the Landauer oracle
@given(st.integers(2, 30), st.floats(0, 8), st.floats(0.1, 4), st.floats(-1, 1))
def test_matches_lyapunov_oracle(n, v, g, f):
    e = v / n
    c = solve_chain(n, e, g, f)
    pops, cur = correlation_matrix(n, e, g, f)
    assert c.current == pytest.approx(cur, abs=1e-12)
    assert np.allclose(c.populations, pops, atol=1e-10)


@given(st.integers(2, 5), st.floats(0, 6), st.floats(-1, 1))
def test_matches_lindblad_engine(n, e, f):
    p = ModelParams(n, tilt=e, driving=f)
    obs = observables(ness(p), p)
    c = solve_chain(n, e, 1.0, f)
    assert c.current == pytest.approx(obs.current, abs=1e-12)
    assert np.allclose(c.populations, obs.populations, atol=1e-11)


def test_current_is_linear_in_driving():
    a = solve_chain(9, 0.7, 1.3, 0.25).current
    b = solve_chain(9, 0.7, 1.3, 1.0).current
    assert a == pytest.approx(b / 4, rel=1e-12)
    assert solve_chain(9, 0.7, 1.3, 0.0).current == 0


@pytest.mark.parametrize("n", sorted(LANDAUER_V6))
def test_deep_insulator_against_landauer(n):
    c = solve_chain(n, 6 / n)
    assert c.current == pytest.approx(LANDAUER_V6[n], rel=1e-9)


def test_moderate_chain_against_landauer():
    ref = float(landauer_current(40, 0.5, dps=50))
    assert solve_chain(40, 0.5).current == pytest.approx(ref, rel=1e-9)


def test_ill_conditioned_tilt_is_reported():
    with pytest.raises(np.linalg.LinAlgError):
        solve_chain(60, 0.5)


def test_large_tilt_populations_and_currents():
    e = 30.0
    c4 = solve_chain(4, e)
    ref = analytic_reference(4, "largeE", e)
    assert c4.current == pytest.approx(ref.current, rel=0.01)
    assert np.allclose(c4.populations, ref.populations, atol=1e-4)
    c5 = solve_chain(5, e)
    assert c5.current / c4.current == pytest.approx(0.25, rel=0.01)


def test_small_tilt_expansion():
    for e in (0.01, 0.03):
        ref = analytic_reference(4, "smallE", e).current
        assert solve_chain(4, e).current == pytest.approx(ref, abs=10 * e**4)
    with pytest.raises(ValueError):
        analytic_reference(6, "smallE", 0.1)


def test_profile_is_antisymmetric():
    c = solve_chain(11, 0.3)
    x, pops = profile(c)
    assert x[-1] == 1.0
    assert np.allclose(pops + pops[::-1], 1, atol=1e-12)
