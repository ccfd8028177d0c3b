"""Steady-state observables: populations, currents, purity, operator entanglement,
eigenbasis decomposition of the current, and rectification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .lindblad import DensityMatrix, ness
from .model import ModelParams, build_basis, current_operator
from .symmetry import sector_eigensystems

__all__ = [
    "NessObservables",
    "populations",
    "bond_currents",
    "impurity",
    "osee",
    "observables",
    "EigenbasisDecomposition",
    "eigenbasis_decomposition",
    "Rectification",
    "rectification",
    "rectification_ratio",
]


@dataclass
class NessObservables:
    populations: np.ndarray
    bond_currents: np.ndarray
    current: float
    impurity: float
    osee: float
    current_from_n1: float

    @property
    def homogeneity(self) -> float:
        """Largest relative spread of the bond currents around their mean."""
        scale = max(abs(self.current), 1e-300)
        return float(np.max(np.abs(self.bond_currents - self.current)) / scale)


def populations(rho: DensityMatrix) -> np.ndarray:
    n = rho.n_sites
    occ = (np.arange(rho.dim)[:, None] >> np.arange(n)) & 1
    return np.real(np.diag(rho.matrix)) @ occ


def bond_currents(rho: DensityMatrix, params: ModelParams) -> np.ndarray:
    basis = build_basis(rho.n_sites)
    out = np.empty(rho.n_sites - 1)
    for q in range(1, rho.n_sites):
        jq = current_operator(params, basis, q).tocoo()
        # tr(rho J) = sum_ab rho_ba J_ab
        out[q - 1] = np.real(np.sum(rho.matrix[jq.col, jq.row] * jq.data))
    return out


def impurity(rho: DensityMatrix) -> float:
    return float(1.0 - np.sum(np.abs(rho.matrix) ** 2))


def osee(rho: DensityMatrix, cut: Optional[int] = None) -> float:
    """Operator-space entanglement entropy (base 2) across a cut after site ``cut``.

    The vectorised operator is normalised in Frobenius norm so the squared
    Schmidt coefficients sum to one.
    """
    n = rho.n_sites
    n_left = n // 2 if cut is None else cut
    n_right = n - n_left
    dl, dr = 2**n_left, 2**n_right
    # state index = left bits + dl * right bits
    t = rho.matrix.reshape(dr, dl, dr, dl).transpose(1, 3, 0, 2).reshape(dl * dl, dr * dr)
    s = np.linalg.svd(t, compute_uv=False)
    lam2 = s**2 / np.sum(s**2)
    lam2 = lam2[lam2 > 1e-300]
    return float(-np.sum(lam2 * np.log2(lam2)))


def observables(rho: DensityMatrix, params: ModelParams) -> NessObservables:
    pops = populations(rho)
    bonds = bond_currents(rho, params)
    from_n1 = params.coupling / 8 * (params.driving + 1 - 2 * pops[0])
    return NessObservables(
        populations=pops,
        bond_currents=bonds,
        current=float(np.mean(bonds)),
        impurity=impurity(rho),
        osee=osee(rho),
        current_from_n1=float(from_n1),
    )


@dataclass
class EigenbasisDecomposition:
    """Per-sector probabilities, coherences and current matrix elements.

    ``coherences[s][mu, nu] = <mu|rho|nu>``, ``matrix_elements[s][nu, mu] =
    <nu|J_q|mu>`` and ``contributions[s][mu, nu]`` is their product, all in
    the ascending-energy eigenbasis of sector ``s``.
    """

    labels: list
    energies: list
    coherences: list
    matrix_elements: list
    contributions: list
    bond: int

    def sector(self, label: str) -> int:
        return self.labels.index(label)

    @property
    def probabilities(self) -> list:
        return [np.real(np.diag(c)) for c in self.coherences]

    @property
    def total_probability(self) -> float:
        return float(sum(p.sum() for p in self.probabilities))

    @property
    def current(self) -> float:
        return float(sum(np.real(c.sum()) for c in self.contributions))


def eigenbasis_decomposition(
    rho: DensityMatrix, params: ModelParams, bond: int = 2, eigensystems=None, gram_tol=1e-10
) -> EigenbasisDecomposition:
    """Decompose the bond current over sector eigenstates.

    ``eigensystems`` is a list of ``(label, energies, vectors)`` with vectors
    embedded in the full Fock space; the default uses particle-number sectors
    with half filling split by CP parity.
    """
    if not 1 <= bond <= params.n_sites - 1:
        raise ValueError(f"bond {bond} outside [1, {params.n_sites - 1}]")
    if eigensystems is None:
        eigensystems = sector_eigensystems(params)
    jq = current_operator(params, build_basis(params.n_sites), bond)
    labels, energies, cohs, mels, contribs = [], [], [], [], []
    for label, vals, vecs in eigensystems:
        gram = vecs.conj().T @ vecs
        err = np.max(np.abs(gram - np.eye(gram.shape[0])))
        if err > gram_tol:
            raise ValueError(f"sector {label}: eigenbasis not orthonormal (Gram residual {err:.2e})")
        r = vecs.conj().T @ rho.matrix @ vecs
        j = vecs.conj().T @ (jq @ vecs)
        labels.append(label)
        energies.append(np.asarray(vals))
        cohs.append(r)
        mels.append(j)
        contribs.append(r * j.T)
    return EigenbasisDecomposition(labels, energies, cohs, mels, contribs, bond)


class Rectification(NamedTuple):
    forward: float
    reverse: float
    ratio: float
    overflow: bool


def rectification_ratio(j_forward, j_reverse, floor: float = 1e-300) -> tuple:
    """``R = -J_F / J_R``; flags (and bounds) the ratio when ``|J_R|`` underflows."""
    if abs(j_reverse) < floor:
        bound = abs(j_forward) / floor
        return (math.copysign(bound, j_forward) if j_forward else 0.0), True
    return -j_forward / j_reverse, False


def rectification(params: ModelParams, method: str = "auto") -> Rectification:
    """Forward (+|f|) and reverse (-|f|) currents and their ratio."""
    f = abs(params.driving)
    if f == 0:
        raise ValueError("rectification needs nonzero driving")
    jf = observables(ness(params.replace(driving=f), method), params.replace(driving=f)).current
    jr = observables(ness(params.replace(driving=-f), method), params.replace(driving=-f)).current
    r, flag = rectification_ratio(jf, jr)
    return Rectification(jf, jr, r, flag)
