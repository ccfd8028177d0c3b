"""Charge-conjugation plus centre-reflection (CP) symmetry sectors.

The CP map sends ``n_j -> 1 - n_{N-j+1}``: reverse the bit order and
complement.  It commutes with the Hamiltonian only at the symmetric chemical
potential, and with the particle number only at half filling.  Away from half
filling a sector pairs the ``m``- and ``(N-m)``-particle configurations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams, build_basis, build_hamiltonian, popcount

__all__ = [
    "cp_image",
    "SectorBasis",
    "cp_sectors",
    "number_sectors",
    "sector_hamiltonian",
    "sector_eigensystems",
]


def cp_image(state: int, n_sites: int) -> int:
    rev = int(format(state, f"0{n_sites}b")[::-1], 2)
    return rev ^ ((1 << n_sites) - 1)


@dataclass(frozen=True)
class SectorBasis:
    """Symmetry-adapted basis of one sector.

    ``elements`` holds ``(representative, period, parity)`` triples; the
    basis vector is ``|rep>`` for period 1 and
    ``(|rep> + parity |CP(rep)>) / sqrt 2`` for period 2.  Plain
    particle-number sectors use period 1 and parity 0.
    """

    label: str
    n_sites: int
    elements: tuple[tuple[int, int, int], ...]

    @property
    def dim(self) -> int:
        return len(self.elements)

    def embedding(self) -> np.ndarray:
        """(2^N, dim) isometry whose columns are the sector basis vectors."""
        w = np.zeros((2**self.n_sites, self.dim))
        for col, (rep, period, parity) in enumerate(self.elements):
            if period == 1:
                w[rep, col] = 1.0
            else:
                w[rep, col] = 1 / np.sqrt(2)
                w[cp_image(rep, self.n_sites), col] = parity / np.sqrt(2)
        return w


def _classes(states, n_sites):
    """CP equivalence classes as (representative, period), representative = larger."""
    seen, out = set(), []
    for s in states:
        s = int(s)
        if s in seen:
            continue
        partner = cp_image(s, n_sites)
        seen.update((s, partner))
        out.append((max(s, partner), 1 if partner == s else 2))
    # period-2 classes first, then descending representative
    out.sort(key=lambda rp: (-rp[1], -rp[0]))
    return out


def cp_sectors(params: ModelParams) -> list[SectorBasis]:
    """All CP sectors of the chain.

    Returns the half-filled ``(N/2, +)`` and ``(N/2, -)`` sectors (N even)
    followed by ``(m|N-m, +/-)`` sectors for every ``m < N/2``.
    """
    if not params.is_cp_symmetric:
        raise ValueError(
            f"CP symmetry needs mu = -E(N+1)/4 = {-params.tilt * (params.n_sites + 1) / 4}, "
            f"got mu = {params.mu}"
        )
    n = params.n_sites
    sectors = []
    if n % 2 == 0:
        classes = _classes(build_basis(n, n // 2).states, n)
        for parity, tag in ((1, "e"), (-1, "o")):
            elems = tuple(
                (rep, per, parity) for rep, per in classes if per == 2 or parity == 1
            )
            sectors.append(SectorBasis(f"{n // 2}{tag}", n, elems))
    for m in range((n - 1) // 2, -1, -1):
        # representatives are the larger member, which lies in the N-m sector
        states = np.concatenate([build_basis(n, n - m).states, build_basis(n, m).states])
        classes = _classes(states, n)
        for parity, tag in ((1, "e"), (-1, "o")):
            elems = tuple((rep, per, parity) for rep, per in classes)
            sectors.append(SectorBasis(f"{m}|{n - m}{tag}", n, elems))
    return sectors


def number_sectors(n_sites: int, split_half_filling: bool = True) -> list[SectorBasis]:
    """Particle-number sectors, the half-filled one optionally split by CP parity."""
    out = []
    for m in range(n_sites + 1):
        if split_half_filling and n_sites % 2 == 0 and m == n_sites // 2:
            classes = _classes(build_basis(n_sites, m).states, n_sites)
            for parity, tag in ((1, "e"), (-1, "o")):
                elems = tuple(
                    (rep, per, parity) for rep, per in classes if per == 2 or parity == 1
                )
                out.append(SectorBasis(f"{m}{tag}", n_sites, elems))
        else:
            states = build_basis(n_sites, m).states
            out.append(SectorBasis(str(m), n_sites, tuple((int(s), 1, 0) for s in states)))
    return out


def sector_hamiltonian(params: ModelParams, sector: SectorBasis) -> np.ndarray:
    """Hamiltonian projected on the sector basis (real symmetric)."""
    if sector.n_sites != params.n_sites:
        raise ValueError("sector and params disagree on the number of sites")
    w = sector.embedding()
    h = build_hamiltonian(params, build_basis(params.n_sites), sparse=True)
    hs = w.T @ (h @ w)
    return (hs + hs.T) / 2


def sector_eigensystems(params: ModelParams, sectors=None):
    """Eigen-decomposition per sector, eigenvectors embedded in the full Fock space.

    Returns a list of ``(label, energies, vectors)`` with ``vectors`` of shape
    ``(2^N, dim)``.  Half-filling is split by CP parity, which is a symmetry
    of the number-block Hamiltonian for any chemical potential.
    """
    if sectors is None:
        sectors = number_sectors(params.n_sites)
    cp_params = params.replace(chem_potential=None)
    shift = params.mu - cp_params.mu
    out = []
    for sec in sectors:
        w = sec.embedding()
        vals, vecs = np.linalg.eigh(sector_hamiltonian(cp_params, sec))
        n_part = popcount(np.array([e[0] for e in sec.elements]))
        if len(set(n_part.tolist())) == 1:
            # mu couples to total particle number only
            vals = vals + shift * (n_part[0] - params.n_sites / 2)
        elif shift:
            raise ValueError("paired CP sectors need the symmetric chemical potential")
        out.append((sec.label, vals, w @ vecs))
    return out
