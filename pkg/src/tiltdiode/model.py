"""Fock-space bookkeeping and Hamiltonian assembly for the tilted chain.

Occupation configurations are integers: bit ``j - 1`` holds the occupation
of site ``j``.  Fermionic operators carry a Jordan-Wigner sign counted over
the occupied sites with a lower index.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ModelParams",
    "FockBasis",
    "build_basis",
    "build_hamiltonian",
    "chain_hamiltonian",
    "annihilation",
    "number_operator",
    "current_operator",
    "hopping_current",
    "model_terms",
    "popcount",
    "bitstring",
]


@dataclass(frozen=True)
class ModelParams:
    """Hamiltonian and boundary-driving parameters.

    ``chem_potential=None`` means the charge-conjugation/parity symmetric
    value ``-E (N + 1) / 4``; read the effective value from :attr:`mu`.
    """

    n_sites: int
    hopping: float = 1.0
    interaction: float = 0.0
    tilt: float = 0.0
    chem_potential: Optional[float] = None
    coupling: float = 1.0
    driving: float = 1.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if abs(self.driving) > 1:
            raise ValueError(f"driving must lie in [-1, 1], got {self.driving}")
        if not self.coupling > 0:
            raise ValueError(f"coupling must be positive, got {self.coupling}")

    @property
    def mu(self) -> float:
        if self.chem_potential is None:
            return -self.tilt * (self.n_sites + 1) / 4
        return self.chem_potential

    @property
    def is_cp_symmetric(self) -> bool:
        cp_mu = -self.tilt * (self.n_sites + 1) / 4
        return abs(self.mu - cp_mu) <= 1e-12 * max(1.0, abs(cp_mu))

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)


def popcount(states):
    """Number of set bits, elementwise for integer arrays."""
    states = np.asarray(states, dtype=np.int64)
    out = np.zeros(states.shape, dtype=np.int64)
    s = states.copy()
    while np.any(s):
        out += s & 1
        s >>= 1
    return out


def bitstring(state: int, n_sites: int, site_one_first: bool = False) -> str:
    """Binary label of a configuration.

    The default is the integer reading (site ``N`` leftmost), which is the
    labelling the printed sector matrices use.  ``site_one_first=True`` gives
    the left-to-right chain picture.
    """
    s = format(state, f"0{n_sites}b")
    return s[::-1] if site_one_first else s


@dataclass(frozen=True)
class FockBasis:
    n_sites: int
    states: np.ndarray
    sector: Optional[int] = None

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, state: int) -> int:
        i = int(np.searchsorted(self.states, state))
        if i >= self.dim or self.states[i] != state:
            raise KeyError(f"state {state} not in basis")
        return i

    def occupations(self) -> np.ndarray:
        """(dim, N) array of site occupations, column ``j`` is site ``j + 1``."""
        return ((self.states[:, None] >> np.arange(self.n_sites)) & 1).astype(np.int8)


def build_basis(n_sites: int, sector: Optional[int] = None) -> FockBasis:
    if n_sites < 2:
        raise ValueError(f"need at least 2 sites, got {n_sites}")
    states = np.arange(2**n_sites, dtype=np.int64)
    if sector is not None:
        if not 0 <= sector <= n_sites:
            raise ValueError(f"particle number {sector} outside [0, {n_sites}]")
        states = states[popcount(states) == sector]
        assert len(states) == comb(n_sites, sector)
    return FockBasis(n_sites, states, sector)


def _jw_sign(states: np.ndarray, i: int, j: int) -> np.ndarray:
    """(-1)^(occupied sites strictly between i and j), 0-based site indices."""
    lo, hi = min(i, j), max(i, j)
    mask = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    return 1 - 2 * (popcount(states & mask) & 1)


def chain_hamiltonian(
    basis: FockBasis,
    onsite: Sequence[float],
    hops: Sequence[tuple[int, int, float]],
    density: Sequence[tuple[int, int, float]] = (),
    offset: float = 0.0,
) -> sp.csr_matrix:
    """General number-conserving Hamiltonian on a Fock basis.

    ``onsite[j]`` multiplies ``n_j``; each hop ``(i, j, t)`` adds
    ``t (c_i^dag c_j + h.c.)`` with the Jordan-Wigner sign; each density
    term ``(i, j, v)`` adds ``v n_i n_j``.  Site indices are 0-based.
    """
    states = basis.states
    occ = basis.occupations().astype(float)
    diag = occ @ np.asarray(onsite, dtype=float) + offset
    for i, j, v in density:
        diag += v * occ[:, i] * occ[:, j]
    rows, cols, vals = [np.arange(basis.dim)], [np.arange(basis.dim)], [diag]
    for i, j, t in hops:
        if t == 0:
            continue
        # c_i^dag c_j: site j occupied, site i empty
        sel = ((states >> j) & 1 == 1) & ((states >> i) & 1 == 0)
        src = states[sel]
        dst = src ^ (1 << i) ^ (1 << j)
        amp = t * _jw_sign(src, i, j)
        di = np.searchsorted(states, dst)
        si = np.nonzero(sel)[0]
        rows += [di, si]
        cols += [si, di]
        vals += [amp, amp]
    h = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim),
    )
    return h.tocsr()


def model_terms(params: ModelParams):
    """``(onsite, hops, density, offset)`` arguments of :func:`chain_hamiltonian`."""
    n = params.n_sites
    j_half = params.hopping / 2
    delta = params.interaction
    sites = np.arange(1, n + 1)
    eps = params.mu + params.tilt / 2 * sites
    # Delta (n_j - 1/2)(n_{j+1} - 1/2) expanded into density and onsite parts
    onsite = eps.copy()
    for j in range(n - 1):
        onsite[j] -= delta / 2
        onsite[j + 1] -= delta / 2
    offset = -eps.sum() / 2 + delta * (n - 1) / 4
    hops = [(j, j + 1, j_half) for j in range(n - 1)]
    density = [(j, j + 1, delta) for j in range(n - 1)]
    return onsite, hops, density, offset


def build_hamiltonian(params: ModelParams, basis: FockBasis, sparse: bool = False):
    """Matrix of the tilted interacting chain Hamiltonian in ``basis``."""
    if basis.n_sites != params.n_sites:
        raise ValueError(
            f"basis has {basis.n_sites} sites but params.n_sites={params.n_sites}"
        )
    h = chain_hamiltonian(basis, *model_terms(params))
    return h if sparse else h.toarray()


def annihilation(basis: FockBasis, site: int) -> sp.csr_matrix:
    """Fermionic ``c_site`` (1-based site) on the full (unfiltered) basis."""
    if basis.sector is not None:
        raise ValueError("c_j changes particle number; use an unfiltered basis")
    k = site - 1
    states = basis.states
    src = states[(states >> k) & 1 == 1]
    below = popcount(src & ((1 << k) - 1))
    sign = 1 - 2 * (below & 1)
    return sp.csr_matrix(
        (sign.astype(float), (src ^ (1 << k), src)), shape=(basis.dim, basis.dim)
    )


def number_operator(basis: FockBasis, site: int) -> sp.csr_matrix:
    occ = ((basis.states >> (site - 1)) & 1).astype(float)
    return sp.diags(occ, format="csr")


def hopping_current(basis: FockBasis, position: int, hopping: float) -> sp.csr_matrix:
    """``i (J/2)(c_i^dag c_{i+1} - h.c.)`` between 0-based positions ``i`` and ``i + 1``."""
    i, j = position, position + 1
    states = basis.states
    sel = ((states >> j) & 1 == 1) & ((states >> i) & 1 == 0)
    si = np.nonzero(sel)[0]
    di = np.searchsorted(states, states[sel] ^ (1 << i) ^ (1 << j))
    amp = 1j * hopping / 2
    # <dst| c_i^dag c_j |src> = 1 for adjacent sites
    rows = np.concatenate([di, si])
    cols = np.concatenate([si, di])
    vals = np.concatenate([np.full(len(si), amp), np.full(len(si), -amp)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


def current_operator(params: ModelParams, basis: FockBasis, bond: int) -> sp.csr_matrix:
    """Bond current ``i (J/2)(c_q^dag c_{q+1} - c_{q+1}^dag c_q)`` for 1-based ``bond``."""
    if not 1 <= bond <= params.n_sites - 1:
        raise ValueError(f"bond {bond} outside [1, {params.n_sites - 1}]")
    return hopping_current(basis, bond - 1, params.hopping)
