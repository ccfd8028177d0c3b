"""Driving through mesoscopic leads.

Each reservoir is replaced by a few fermionic lead modes.  A mode has
energy ``eps``, hops with amplitude ``kappa`` onto the adjacent boundary
site and is damped by its own Markovian bath with injection rate
``gamma f(eps)`` and ejection rate ``gamma (1 - f(eps))``, where ``f`` is the
reservoir's Fermi-Dirac distribution.

Modes are placed as extra sites of an extended chain: left modes first,
then the system, then right modes.  Jordan-Wigner signs follow that order.
Right mode ``k`` (0-based) hops with amplitude ``(-1)^k kappa``.  The sign is
a gauge choice (``c -> -c`` on that mode leaves every observable unchanged)
that makes mirror-symmetric leads exactly CP symmetric in the bit basis, so
the generator can be restricted to its CP-even part.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .lindblad import MAX_SITES, Superoperator, lindbladian, represent, solve_ness
from .model import (
    ModelParams,
    annihilation,
    build_basis,
    chain_hamiltonian,
    hopping_current,
    model_terms,
)
from .observables import rectification_ratio

__all__ = [
    "LeadMode",
    "LeadSpec",
    "ExtendedModel",
    "fermi_dirac",
    "effective_spectral_density",
    "symmetric_leads",
    "wide_band_coupling",
    "DEFAULT_LEAD_COUPLING",
    "build_extended_model",
    "MesoleadsResult",
    "mesoleads_ness",
    "mesoleads_rectification",
    "reference_current",
]

MAX_EXTENDED_SITES = 8


def fermi_dirac(omega, temperature: float, chem_potential: float):
    """``1 / (exp((omega - mu) / T) + 1)``, evaluated without overflow."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return expit(-(np.asarray(omega, dtype=float) - chem_potential) / temperature)


@dataclass(frozen=True)
class LeadMode:
    energy: float
    damping: float
    coupling: float = 1.0

    def __post_init__(self):
        if not self.damping > 0:
            raise ValueError(f"lead damping must be positive, got {self.damping}")


@dataclass(frozen=True)
class LeadSpec:
    """Modes, temperatures and chemical potentials of the left and right leads."""

    left: tuple
    right: tuple
    temperature_left: float
    temperature_right: float
    mu_left: float
    mu_right: float

    def __post_init__(self):
        if not self.left or not self.right:
            raise ValueError("each lead needs at least one mode")
        if self.temperature_left <= 0 or self.temperature_right <= 0:
            raise ValueError("lead temperatures must be positive")

    def modes(self, side: str) -> tuple:
        if side not in ("L", "R"):
            raise ValueError(f"side must be 'L' or 'R', got {side!r}")
        return self.left if side == "L" else self.right

    def occupation(self, side: str) -> np.ndarray:
        modes = self.modes(side)
        t, mu = (
            (self.temperature_left, self.mu_left)
            if side == "L"
            else (self.temperature_right, self.mu_right)
        )
        return fermi_dirac([m.energy for m in modes], t, mu)

    def reversed_bias(self) -> "LeadSpec":
        return LeadSpec(
            self.left, self.right, self.temperature_left, self.temperature_right,
            -self.mu_left, -self.mu_right,
        )

    def with_coupling(self, kappa: float) -> "LeadSpec":
        def scale(ms):
            return tuple(LeadMode(m.energy, m.damping, kappa) for m in ms)

        return LeadSpec(
            scale(self.left), scale(self.right), self.temperature_left,
            self.temperature_right, self.mu_left, self.mu_right,
        )


DEFAULT_LEAD_COUPLING = 0.25


def wide_band_coupling(energies: Sequence[float], damping: float, coupling: float = 1.0) -> float:
    """Mode coupling ``kappa`` at which the effective spectral density at
    ``omega = 0`` equals the Lindblad boundary rate ``Gamma / 4``."""
    density = sum(damping / (e**2 + damping**2 / 4) for e in energies)
    return float(np.sqrt(coupling / 4 / density))


def symmetric_leads(
    energies: Sequence[float] = (-0.5, 0.5),
    damping: float = 1.0,
    coupling: float = DEFAULT_LEAD_COUPLING,
    temperature: float = 10.0,
    bias: float = 100.0,
) -> LeadSpec:
    """Identical leads on both sides with chemical potentials ``+bias`` (left) and ``-bias`` (right).

    The default ``coupling`` is :func:`wide_band_coupling` of the default
    modes with ``Gamma = 1``.
    """
    modes = tuple(LeadMode(float(e), damping, coupling) for e in energies)
    return LeadSpec(modes, modes, temperature, temperature, bias, -bias)


def effective_spectral_density(omega, leads: LeadSpec, side: str):
    """Sum of the mode Lorentzians ``|kappa|^2 gamma / ((omega - eps)^2 + (gamma/2)^2)``."""
    w = np.asarray(omega, dtype=float)
    out = np.zeros_like(w)
    for m in leads.modes(side):
        out = out + abs(m.coupling) ** 2 * m.damping / ((w - m.energy) ** 2 + (m.damping / 2) ** 2)
    return out


@dataclass
class ExtendedModel:
    system: ModelParams
    leads: LeadSpec
    hamiltonian: sp.csr_matrix = field(repr=False)
    jumps: list = field(repr=False)

    @property
    def n_left(self) -> int:
        return len(self.leads.left)

    @property
    def n_total(self) -> int:
        return self.system.n_sites + len(self.leads.left) + len(self.leads.right)

    def system_position(self, site: int) -> int:
        """0-based extended-chain position of system site ``site`` (1-based)."""
        return self.n_left + site - 1

    def current_operator(self, bond: int) -> sp.csr_matrix:
        if not 1 <= bond <= self.system.n_sites - 1:
            raise ValueError(f"bond {bond} outside [1, {self.system.n_sites - 1}]")
        return hopping_current(build_basis(self.n_total), self.system_position(bond), self.system.hopping)

    @property
    def is_cp_symmetric(self) -> bool:
        """Leads are mirror images (energy -> -energy, occupation -> 1 - occupation)
        and the system sits at its CP-symmetric chemical potential."""
        lv, rv = self.leads.left, self.leads.right[::-1]
        if len(lv) != len(rv) or not self.system.is_cp_symmetric:
            return False
        tol = 1e-12
        occ_l = self.leads.occupation("L")
        occ_r = self.leads.occupation("R")[::-1]
        return all(
            abs(a.energy + b.energy) <= tol
            and a.damping == b.damping
            and a.coupling == b.coupling
            and abs(fa + fb - 1) <= tol
            for a, b, fa, fb in zip(lv, rv, occ_l, occ_r)
        )

    def superoperator(self, kind: str = "auto") -> Superoperator:
        """``kind="auto"`` picks the CP-even representation when it is exact."""
        if kind == "auto":
            kind = "symmetric" if self.is_cp_symmetric else "hermitian"
        m, q = represent(lindbladian(self.hamiltonian, self.jumps), self.n_total, kind)
        return Superoperator(m, self.n_total, None, q, kind)


def build_extended_model(system: ModelParams, leads: LeadSpec) -> ExtendedModel:
    """System Hamiltonian plus lead modes, and the per-mode damping operators."""
    n_l, n_r, n = len(leads.left), len(leads.right), system.n_sites
    total = n_l + n + n_r
    if total > MAX_EXTENDED_SITES or total > MAX_SITES:
        raise ValueError(
            f"{total} extended sites exceed the limit of {min(MAX_EXTENDED_SITES, MAX_SITES)}"
        )
    onsite_s, hops_s, density_s, offset = model_terms(system)
    onsite = np.zeros(total)
    onsite[n_l : n_l + n] = onsite_s
    hops = [(i + n_l, j + n_l, t) for i, j, t in hops_s]
    density = [(i + n_l, j + n_l, v) for i, j, v in density_s]
    lead_pos = []
    for k, m in enumerate(leads.left):
        lead_pos.append((k, m, "L"))
        hops.append((k, n_l, m.coupling))
    for k, m in enumerate(leads.right):
        pos = n_l + n + k
        lead_pos.append((pos, m, "R"))
        hops.append((n_l + n - 1, pos, (-1) ** k * m.coupling))
    for pos, m, _ in lead_pos:
        onsite[pos] = m.energy
        offset -= m.energy / 2
    basis = build_basis(total)
    h = chain_hamiltonian(basis, onsite, hops, density, offset)
    occ = {"L": leads.occupation("L"), "R": leads.occupation("R")}
    jumps = []
    counters = {"L": 0, "R": 0}
    for pos, m, side in lead_pos:
        f = float(occ[side][counters[side]])
        counters[side] += 1
        c = annihilation(basis, pos + 1)
        if f > 0:
            jumps.append(np.sqrt(m.damping * f) * c.T.tocsr())
        if f < 1:
            jumps.append(np.sqrt(m.damping * (1 - f)) * c)
    return ExtendedModel(system, leads, h, jumps)


@dataclass
class MesoleadsResult:
    tilt: float
    forward: float
    reverse: float
    ratio: float
    overflow: bool
    forward_bonds: np.ndarray
    reverse_bonds: np.ndarray


def mesoleads_ness(model: ExtendedModel, method: str = "direct", kind: str = "auto"):
    """NESS of the extended chain and the current on every system bond.

    Fill-in of the sparse LU is close to dense for these generators, so the
    dense bordered LU (``"direct"``) is the faster default.
    """
    rho = solve_ness(model.superoperator(kind), method)
    bonds = np.empty(model.system.n_sites - 1)
    for q in range(1, model.system.n_sites):
        jq = model.current_operator(q).tocoo()
        bonds[q - 1] = np.real(np.sum(rho.matrix[jq.col, jq.row] * jq.data))
    return rho, bonds


def mesoleads_rectification(
    system: ModelParams,
    leads: LeadSpec,
    tilt_grid: Sequence[float],
    method: str = "direct",
) -> list[MesoleadsResult]:
    """Forward (given bias) and reverse (sign-flipped chemical potentials)
    currents over a tilt grid; the current is the mean over system bonds."""
    out = []
    for e in tilt_grid:
        p = system.replace(tilt=float(e), chem_potential=None)
        _, fb = mesoleads_ness(build_extended_model(p, leads), method)
        _, rb = mesoleads_ness(build_extended_model(p, leads.reversed_bias()), method)
        jf, jr = float(np.mean(fb)), float(np.mean(rb))
        r, flag = rectification_ratio(jf, jr)
        out.append(MesoleadsResult(float(e), jf, jr, r, flag, fb, rb))
    return out


def reference_current(
    leads: LeadSpec, n_sites: int = 4, hopping: float = 1.0, method: str = "direct"
) -> float:
    """Forward current of the untilted noninteracting chain with the same leads."""
    p = ModelParams(n_sites, hopping=hopping)
    _, bonds = mesoleads_ness(build_extended_model(p, leads), method)
    return float(np.mean(bonds))
