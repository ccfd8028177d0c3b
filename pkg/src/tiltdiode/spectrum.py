"""Sector spectra versus tilt, avoided crossings, and strong-coupling energies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .model import ModelParams
from .symmetry import SectorBasis, sector_hamiltonian

__all__ = [
    "POLE_TOL",
    "PoleError",
    "DomainEnergies",
    "perturbative_energies",
    "N4Energies",
    "perturbative_energies_n4",
    "domain_crossing_tilt",
    "SpectrumSweep",
    "sweep_spectrum",
    "AvoidedCrossing",
    "find_avoided_crossings",
]

POLE_TOL = 1e-9


class PoleError(ZeroDivisionError):
    """A perturbative denominator vanished (degenerate perturbation theory)."""


def _inv(x: float, what: str) -> float:
    if abs(x) < POLE_TOL:
        raise PoleError(f"perturbative pole: {what} = {x:.3e}")
    return 1.0 / x


class DomainEnergies(NamedTuple):
    left: float
    right: float
    corrected_left: float
    corrected_right: float


def perturbative_energies(params: ModelParams, n: int) -> DomainEnergies:
    """Zero-hopping energies of the left/right ``n``-particle domains and
    their second-order hopping corrections."""
    N, J, D, E = params.n_sites, params.hopping, params.interaction, params.tilt
    if not 0 <= n <= N:
        raise ValueError(f"particle number {n} outside [0, {N}]")
    left = (D * (N - 3) - E * n * (N - n)) / 4
    right = (D * (N - 3) + E * n * (N - n)) / 4
    return DomainEnergies(
        left,
        right,
        left + J**2 * _inv(4 * D - 2 * E, "4*Delta - 2*E"),
        right + J**2 * _inv(4 * D + 2 * E, "4*Delta + 2*E"),
    )


class N4Energies(NamedTuple):
    """Corrected energies of the remaining N=4 half-filled even-sector states.

    Names follow the chain picture, site 1 first: ``e1010`` has sites 1 and 3
    occupied, ``e1001_plus`` is the even superposition of 1001 and 0110.
    """

    e1010: float
    e0101: float
    e1001_plus: float


def perturbative_energies_n4(params: ModelParams) -> N4Energies:
    if params.n_sites != 4:
        raise ValueError("closed forms exist for N=4 only")
    J2, D, E = params.hopping**2, params.interaction, params.tilt
    e1010 = -(2 * E + 3 * D) / 4 + J2 / 2 * (
        _inv(E - 2 * D, "E - 2*Delta") - 2 * _inv(E + D, "E + Delta")
    )
    e0101 = (2 * E - 3 * D) / 4 + J2 / 2 * (
        2 * _inv(E - D, "E - Delta") - _inv(E + 2 * D, "E + 2*Delta")
    )
    e1001 = -D / 4 + J2 * (_inv(D + E, "Delta + E") + _inv(D - E, "Delta - E"))
    return N4Energies(e1010, e0101, e1001)


def domain_crossing_tilt(params: ModelParams, bracket=(0.05, None)) -> float:
    """Tilt where the corrected left half-filled domain meets the corrected
    even 1001/0110 state (N=4)."""
    D = params.interaction

    def diff(e):
        p = params.replace(tilt=e)
        return perturbative_energies(p, 2).corrected_left - perturbative_energies_n4(p).e1001_plus

    lo, hi = bracket
    if hi is None:
        hi = D * (1 - 1e-3)
    grid = np.linspace(lo, hi, 400)
    vals = np.array([diff(e) for e in grid])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(idx) == 0:
        raise ValueError("no crossing below the first pole")
    k = idx[0]
    return brentq(diff, grid[k], grid[k + 1], xtol=1e-12)


@dataclass
class SpectrumSweep:
    tilt_grid: np.ndarray
    energies: np.ndarray  # (n_grid, dim), ascending per row
    hamiltonian_at: Callable[[float], np.ndarray] = field(repr=False)
    label: str = ""

    def gaps(self) -> np.ndarray:
        return np.diff(self.energies, axis=1)


def sweep_spectrum(
    template: ModelParams, sector: SectorBasis, tilt_grid: Sequence[float]
) -> SpectrumSweep:
    """Sorted sector eigenvalues along ``tilt_grid``; mu is re-derived per point."""
    grid = np.asarray(tilt_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("tilt grid must be non-empty and strictly increasing")

    def ham(e):
        return sector_hamiltonian(template.replace(tilt=float(e), chem_potential=None), sector)

    energies = np.empty((len(grid), sector.dim))
    for i, e in enumerate(grid):
        try:
            energies[i] = np.linalg.eigvalsh(ham(e))
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"eigensolver failed at E={e}: {exc}") from exc
    return SpectrumSweep(grid, energies, ham, sector.label)


class AvoidedCrossing(NamedTuple):
    bands: tuple[int, int]  # 1-based band indices, ascending energy
    tilt: float
    gap: float


def find_avoided_crossings(sweep: SpectrumSweep, xtol: float = 1e-6) -> list[AvoidedCrossing]:
    """Interior minima of every adjacent-band gap, refined by bounded
    golden-section search, sorted by tilt."""
    grid = sweep.tilt_grid
    gaps = sweep.gaps()
    found = []
    for b in range(gaps.shape[1]):
        g = gaps[:, b]
        for k in range(1, len(grid) - 1):
            if g[k] < g[k - 1] and g[k] <= g[k + 1]:

                def gap_at(e, b=b):
                    ev = np.linalg.eigvalsh(sweep.hamiltonian_at(e))
                    return ev[b + 1] - ev[b]

                res = minimize_scalar(
                    gap_at,
                    bounds=(grid[k - 1], grid[k + 1]),
                    method="bounded",
                    options={"xatol": xtol},
                )
                e_star, gap = float(res.x), float(res.fun)
                if gap > g[k]:
                    e_star, gap = float(grid[k]), float(g[k])
                found.append(AvoidedCrossing((b + 1, b + 2), e_star, abs(gap)))
    found.sort(key=lambda c: c.tilt)
    return found
