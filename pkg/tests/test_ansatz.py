import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from tiltdiode.ansatz import (
    amplitude_dk,
    ansatz_current,
    ansatz_populations,
    dark_state,
    detailed_balance_probabilities,
    localization_length,
    probabilities,
)
from tiltdiode.lindblad import ness
from tiltdiode.model import ModelParams
from tiltdiode.noninteracting import solve_chain
from tiltdiode.observables import observables


@given(st.sampled_from([4, 6, 8, 10, 12]), st.floats(0, 10), st.floats(0.2, 10))
def test_probabilities_normalised_and_peaked(n, d, e):
    w = probabilities(n, 1.0, d, e)
    assert w.total == pytest.approx(1, abs=1e-30)
    # p_{N/2 +- 1} / p_{N/2} = (J / (2 Delta + N E / 2))^2: half filling dominates
    # once the insulating gap exceeds the hopping
    assume(2 * d + n * e / 2 > 1.0)
    assert w.peak == max(w.p)


@given(st.sampled_from([4, 6, 8]), st.floats(0.5, 8), st.floats(0.2, 8))
def test_detailed_balance_reproduces_closed_form(n, d, e):
    a = probabilities(n, 1.0, d, e).p
    b = detailed_balance_probabilities(n, 1.0, d, e).p
    assert max(abs(x - y) / y for x, y in zip(a, b)) < mp.mpf(10) ** -25


def test_first_break_away_amplitude():
    d = amplitude_dk(2, 1, 1.0, 5.0, 2.0, 4)
    assert d == pytest.approx(1 / 12)
    assert amplitude_dk(2, 1, 1.0, 5.0, 2.0, 4, kind="hole") == d
    # a particle reaching site 1 picks up the edge factor (2D + mE)/(D + mE)
    d2 = amplitude_dk(2, 2, 1.0, 5.0, 2.0, 4)
    assert d2 == pytest.approx(1 / 12 / 14 * (10 + 4) / (5 + 4))
    with pytest.raises(ValueError):
        amplitude_dk(2, 3, 1.0, 5.0, 2.0, 4)


def test_dark_state_counts_shared_configuration_once():
    st_ = dark_state(2, 4, 1.0, 5.0, 2.0)
    assert len(st_.configurations) == len(set(st_.configurations)) == 4
    assert st_.configurations[0] == 0b1100


@pytest.mark.parametrize("n_sites", [4, 8, 12, 16])
def test_reverse_current_decreases_with_tilt(n_sites):
    cur = [abs(ansatz_current(n_sites, 1.0, 5.0, e)) for e in (0.5, 1, 2, 4, 8)]
    assert all(b < a for a, b in zip(cur, cur[1:]))


@pytest.mark.parametrize("e", [0.5, 2.0, 6.0])
def test_reverse_current_decreases_with_size(e):
    cur = [abs(ansatz_current(n, 1.0, 2.0, e)) for n in (4, 6, 8, 10, 12, 14, 16)]
    assert all(b < a for a, b in zip(cur, cur[1:]))


def test_extended_precision_is_converged():
    lo = ansatz_current(16, 1.0, 10.0, 10.0, digits=40)
    hi = ansatz_current(16, 1.0, 10.0, 10.0, digits=80)
    assert hi < 0
    assert abs(lo - hi) / abs(hi) < mp.mpf(10) ** -35


def test_n4_reverse_current_against_lindblad():
    p = ModelParams(4, interaction=5, tilt=4.0, driving=-1)
    exact = observables(ness(p), p).current
    approx = float(ansatz_current(4, 1.0, 5.0, 4.0))
    assert abs(np.log10(approx / exact)) < 0.3


def test_forward_bias_needs_no_interaction():
    pops = ansatz_populations(6, 1.0, 0.0, 2.0, driving=1)
    rev = ansatz_populations(6, 1.0, 0.0, 2.0, driving=-1)
    assert pops == rev[::-1]
    with pytest.raises(ValueError):
        ansatz_populations(6, 1.0, 1.0, 2.0, driving=1)


def test_noninteracting_populations():
    c = solve_chain(10, 3.0, driving=-1)
    pops = [float(x) for x in ansatz_populations(10, 1.0, 0.0, 3.0)]
    assert np.max(np.abs(np.array(pops) - c.populations)) < 0.01


def test_input_validation():
    with pytest.raises(ValueError):
        ansatz_current(8, 1.0, 5.0, 1.0, digits=16)
    with pytest.raises(ValueError):
        dark_state(2, 4, 1.0, 0.0, 0.0)
    with pytest.warns(UserWarning):
        ansatz_populations(4, 1.0, 5.0, 0.0)
    assert localization_length(np.e) == pytest.approx(1.0)
