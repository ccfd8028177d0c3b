import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from tiltdiode.model import (
    ModelParams,
    annihilation,
    bitstring,
    build_basis,
    build_hamiltonian,
    current_operator,
    number_operator,
    popcount,
)

params_st = st.builds(
    ModelParams,
    n_sites=st.integers(2, 6),
    hopping=st.floats(0.1, 2),
    interaction=st.floats(-3, 6),
    tilt=st.floats(0, 10),
    coupling=st.floats(0.1, 4),
    driving=st.floats(-1, 1),
)


def test_default_mu_is_cp_symmetric():
    p = ModelParams(4, tilt=2.0)
    assert p.mu == pytest.approx(-2.5)
    assert p.is_cp_symmetric
    assert not p.replace(chem_potential=0.3).is_cp_symmetric


@pytest.mark.parametrize("kw", [dict(n_sites=1), dict(n_sites=4, driving=1.5), dict(n_sites=4, coupling=0)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_popcount_and_bitstring():
    assert list(popcount(np.array([0, 1, 3, 7, 10]))) == [0, 1, 2, 3, 2]
    # bit j-1 is site j; the default string prints site N first
    assert bitstring(0b0011, 4) == "0011"
    assert bitstring(0b0011, 4, site_one_first=True) == "1100"


def test_sector_basis_size():
    assert build_basis(6, 3).dim == 20
    with pytest.raises(ValueError):
        build_basis(4, 5)


def test_canonical_anticommutation():
    b = build_basis(4)
    cs = [annihilation(b, j) for j in range(1, 5)]
    eye = sp.identity(b.dim)
    for i, ci in enumerate(cs):
        for j, cj in enumerate(cs):
            acc = ci @ cj.T + cj.T @ ci
            want = eye if i == j else 0 * eye
            assert abs(acc - want).max() < 1e-14
            assert abs(ci @ cj + cj @ ci).max() < 1e-14


def test_number_operator_matches_cdag_c():
    b = build_basis(3)
    for j in (1, 2, 3):
        c = annihilation(b, j)
        assert abs(c.T @ c - number_operator(b, j)).max() == 0


@given(params_st)
def test_hamiltonian_hermitian_and_number_conserving(p):
    b = build_basis(p.n_sites)
    h = build_hamiltonian(p, b)
    assert np.allclose(h, h.T.conj())
    pc = popcount(b.states)
    assert np.all(h[pc[:, None] != pc[None, :]] == 0)


def test_hamiltonian_from_second_quantised_operators():
    p = ModelParams(4, hopping=0.7, interaction=1.3, tilt=0.9, chem_potential=0.2)
    b = build_basis(4)
    c = [annihilation(b, j).toarray() for j in range(1, 5)]
    n = [x.T @ x for x in c]
    one = np.eye(b.dim)
    h = np.zeros((b.dim, b.dim))
    for j in range(3):
        h += p.hopping / 2 * (c[j].T @ c[j + 1] + c[j + 1].T @ c[j])
        h += p.interaction * (n[j] - one / 2) @ (n[j + 1] - one / 2)
    for j in range(4):
        h += (p.mu + p.tilt * (j + 1) / 2) * (n[j] - one / 2)
    assert np.allclose(build_hamiltonian(p, b), h, atol=1e-13)


def test_current_is_continuity_of_density():
    # d<n_1>/dt from H alone equals -<J_1>: i[H, n_1] = -J_1
    p = ModelParams(4, interaction=2.0, tilt=1.1)
    b = build_basis(4)
    h = build_hamiltonian(p, b)
    n1 = number_operator(b, 1).toarray()
    j1 = current_operator(p, b, 1).toarray()
    assert np.allclose(1j * (h @ n1 - n1 @ h), -j1, atol=1e-13)
    with pytest.raises(ValueError):
        current_operator(p, b, 4)
