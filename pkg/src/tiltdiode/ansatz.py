"""Extended-precision dark-state ansatz for the insulating reverse-bias NESS.

For reverse driving (f = -1) the NESS is modelled as a mixture
``sum_n p_n |Psi_n><Psi_n|`` over particle-number sectors.  ``|Psi_n>`` is
the right domain ``|0...0 1...1>`` (n particles against site N) dressed
with single break-away configurations: the innermost particle moved k sites
to the left, or the innermost hole moved k sites to the right.  Both reach
amplitude ``d_k = prod_{i<=k} J / (2 Delta + i E)``, with a boundary factor
when the particle lands on site 1 or the hole on site N.

All arithmetic runs in mpmath at a configurable number of digits so that
currents far below double precision stay meaningful.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import mpmath as mp

__all__ = [
    "DEFAULT_DIGITS",
    "MIN_DIGITS",
    "DarkStateAmplitudes",
    "AnsatzProbabilities",
    "AnsatzState",
    "amplitude_dk",
    "dark_state",
    "probabilities",
    "detailed_balance_probabilities",
    "ansatz_populations",
    "ansatz_current",
    "ansatz_state",
    "localization_length",
]

DEFAULT_DIGITS = 50
MIN_DIGITS = 32


def _check_digits(digits: int) -> int:
    if digits < MIN_DIGITS:
        raise ValueError(f"ansatz needs at least {MIN_DIGITS} digits, got {digits}")
    return int(digits)


def _check_energies(interaction, tilt):
    if tilt < 0 or interaction < 0:
        raise ValueError("ansatz needs non-negative interaction and tilt")
    if tilt == 0 and interaction == 0:
        raise ValueError("ansatz undefined for a gapless chain (Delta = E = 0)")


def localization_length(q, hopping=1.0):
    """``xi(Q) = 1 / ln(Q / J)``; a diagnostic of the limiting amplitude decay."""
    return 1 / mp.log(mp.mpf(q) / hopping)


def _bare(k: int, J, D, E):
    """``prod_{i=1}^{k} J / (2 Delta + i E)`` (empty product = 1)."""
    out = mp.mpf(1)
    for i in range(1, k + 1):
        out *= J / (2 * D + i * E)
    return out


def _edge_factor(site_count: int, D, E):
    """``(2 Delta + m E) / (Delta + m E)`` for a break-away of length ``m`` ending at an edge."""
    return (2 * D + site_count * E) / (D + site_count * E)


def amplitude_dk(
    n: int,
    k: int,
    hopping: float,
    interaction: float,
    tilt: float,
    n_sites: int,
    kind: str = "particle",
    digits: int = DEFAULT_DIGITS,
):
    """Break-away amplitude after ``k`` hops in the ``n``-particle sector.

    ``kind`` selects the moving particle or the moving hole; the two coincide
    at ``k = 1`` and the edge factor applies when either view reaches its
    chain end.
    """
    _check_energies(interaction, tilt)
    if kind not in ("particle", "hole"):
        raise ValueError(f"kind must be 'particle' or 'hole', got {kind!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    limit = n_sites - n if kind == "particle" else n
    if k > limit:
        raise ValueError(f"a {kind} in sector n={n} can move at most {limit} sites")
    with mp.workdps(_check_digits(digits)):
        J, D, E = mp.mpf(hopping), mp.mpf(interaction), mp.mpf(tilt)
        d = _bare(k, J, D, E)
        reaches_1 = (kind == "particle" or k == 1) and k == n_sites - n
        reaches_n = (kind == "hole" or k == 1) and k == n
        if reaches_1:
            d *= _edge_factor(n_sites - n, D, E)
        elif reaches_n:
            d *= _edge_factor(n, D, E)
        return +d


@dataclass
class DarkStateAmplitudes:
    """Configurations (site-occupation bitmasks, bit j-1 = site j) and
    amplitudes of one dressed domain state, unnormalised."""

    n: int
    n_sites: int
    configurations: list
    amplitudes: list
    particle: list  # d_k of the particle break-aways, k = 1..N-n
    hole: list  # d_k of the hole break-aways, k = 1..n
    edge_factors: tuple  # (f_1, f_N)

    @property
    def norm2(self):
        return mp.fsum(a * a for a in self.amplitudes)

    def occupation(self, site: int):
        """``<n_site>`` in the normalised state."""
        bit = 1 << (site - 1)
        num = mp.fsum(a * a for c, a in zip(self.configurations, self.amplitudes) if c & bit)
        return num / self.norm2


def dark_state(
    n: int,
    n_sites: int,
    hopping: float,
    interaction: float,
    tilt: float,
    order: Optional[int] = None,
    digits: int = DEFAULT_DIGITS,
) -> DarkStateAmplitudes:
    """Dressed right-domain state of sector ``n`` with break-aways up to ``order`` hops."""
    _check_energies(interaction, tilt)
    if not 0 <= n <= n_sites:
        raise ValueError(f"particle number {n} outside [0, {n_sites}]")
    if order is not None and not 0 <= order <= n_sites:
        raise ValueError(f"unsupported order {order}: single break-aways span at most {n_sites} hops")
    N = n_sites
    with mp.workdps(_check_digits(digits)):
        J, D, E = mp.mpf(hopping), mp.mpf(interaction), mp.mpf(tilt)
        f1 = _edge_factor(N - n, D, E) if N - n > 0 else mp.mpf(1)
        fN = _edge_factor(n, D, E) if n > 0 else mp.mpf(1)
        full = ((1 << N) - 1) ^ ((1 << (N - n)) - 1)  # sites N-n+1..N
        configs, amps = [full], [mp.mpf(1)]
        kmax_p = N - n if order is None else min(order, N - n)
        kmax_h = n if order is None else min(order, n)
        particle, hole = [], []
        if n == 0 or n == N:
            return DarkStateAmplitudes(n, N, configs, amps, particle, hole, (f1, fN))
        inner = N - n  # 0-based index of the innermost particle
        for k in range(1, kmax_p + 1):
            d = _bare(k, J, D, E)
            if k == N - n or (k == 1 and k == n):
                d *= f1 if k == N - n else fN
            particle.append(d)
            configs.append(full ^ (1 << inner) | (1 << (inner - k)))
            amps.append(d)
        for k in range(1, kmax_h + 1):
            d = _bare(k, J, D, E)
            if k == n or (k == 1 and k == N - n):
                d *= fN if k == n else f1
            hole.append(d)
            if k == 1:
                continue  # same configuration as the first particle break-away
            configs.append(full ^ (1 << (inner - 1 + k)) | (1 << (inner - 1)))
            amps.append(d)
        return DarkStateAmplitudes(n, N, configs, [+a for a in amps], particle, hole, (f1, fN))


@dataclass
class AnsatzProbabilities:
    n_sites: int
    p: list  # p_n, n = 0..N

    @property
    def peak(self):
        return self.p[self.n_sites // 2]

    @property
    def total(self):
        return mp.fsum(self.p)


def probabilities(
    n_sites: int, hopping: float, interaction: float, tilt: float, digits: int = DEFAULT_DIGITS
) -> AnsatzProbabilities:
    """Closed-form sector weights ``p_{N/2+m}`` for even N, normalised."""
    if n_sites % 2:
        raise ValueError("the closed form holds for even N; use detailed_balance_probabilities")
    if tilt <= 0:
        raise ValueError("closed-form weights need E > 0")
    _check_energies(interaction, tilt)
    N = n_sites
    with mp.workdps(_check_digits(digits)):
        J, D, E = mp.mpf(hopping), mp.mpf(interaction), mp.mpf(tilt)
        y = 2 * D / E + mp.mpf(N) / 2
        raw = []
        for n in range(N + 1):
            m = abs(n - N // 2)
            den = mp.mpf(1)
            for j in range(-m + 1, m):
                den *= (y + j) ** (2 * (m - abs(j)))
            raw.append((J / E) ** (2 * m * m) / den)
        total = mp.fsum(raw)
        return AnsatzProbabilities(N, [+(r / total) for r in raw])


def detailed_balance_probabilities(
    n_sites: int, hopping: float, interaction: float, tilt: float, digits: int = DEFAULT_DIGITS
) -> AnsatzProbabilities:
    """Sector weights from balancing injection at site N against ejection at site 1.

    Sector ``n`` gains a particle only through the hole break-away reaching
    site N, and sector ``n+1`` loses one only through the particle break-away
    reaching site 1; with the bare amplitudes this gives
    ``p_{n+1} / p_n = d_n^2 / d_{N-n-1}^2``.
    """
    _check_energies(interaction, tilt)
    N = n_sites
    with mp.workdps(_check_digits(digits)):
        J, D, E = mp.mpf(hopping), mp.mpf(interaction), mp.mpf(tilt)
        raw = [mp.mpf(1)]
        for n in range(N):
            raw.append(raw[-1] * (_bare(n, J, D, E) / _bare(N - n - 1, J, D, E)) ** 2)
        total = mp.fsum(raw)
        return AnsatzProbabilities(N, [+(r / total) for r in raw])


def _weights(n_sites, hopping, interaction, tilt, digits):
    if n_sites % 2 == 0 and tilt > 0:
        return probabilities(n_sites, hopping, interaction, tilt, digits)
    return detailed_balance_probabilities(n_sites, hopping, interaction, tilt, digits)


def ansatz_populations(
    n_sites: int,
    hopping: float,
    interaction: float,
    tilt: float,
    order: Optional[int] = None,
    driving: int = -1,
    digits: int = DEFAULT_DIGITS,
) -> list:
    """Site populations of the dark-state mixture.

    ``driving=-1`` is the native reverse-bias construction.  ``driving=+1``
    is available at Delta = 0 only, where the forward NESS is the mirror
    image of the reverse one.
    """
    if driving not in (-1, 1):
        raise ValueError("the ansatz describes maximal driving, f = +1 or -1")
    if driving == 1 and interaction != 0:
        raise ValueError("forward-bias ansatz is valid only without interactions")
    if n_sites < 2:
        raise ValueError(f"need at least 2 sites, got {n_sites}")
    _check_energies(interaction, tilt)
    with mp.workdps(_check_digits(digits)):
        if tilt == 0:
            warnings.warn(
                "E = 0: left and right domains are degenerate; using their symmetric mixture",
                stacklevel=2,
            )
        w = _weights(n_sites, hopping, interaction, tilt, digits)
        pops = [mp.mpf(0)] * n_sites
        for n in range(n_sites + 1):
            st = dark_state(n, n_sites, hopping, interaction, tilt, order, digits)
            for j in range(n_sites):
                pops[j] += w.p[n] * st.occupation(j + 1)
        if tilt == 0:
            mirror = [1 - x for x in reversed(pops)]
            pops = [(a + b) / 2 for a, b in zip(pops, mirror)]
        if driving == 1:
            pops = pops[::-1]
        return [+x for x in pops]


def ansatz_current(
    n_sites: int,
    hopping: float,
    interaction: float,
    tilt: float,
    coupling: float = 1.0,
    driving: int = -1,
    order: Optional[int] = None,
    digits: int = DEFAULT_DIGITS,
):
    """Signed current from the first-site population, ``(Gamma/8)(f + 1 - 2 <n_1>)``."""
    pops = ansatz_populations(n_sites, hopping, interaction, tilt, order, driving, digits)
    with mp.workdps(_check_digits(digits)):
        return mp.mpf(coupling) / 8 * (driving + 1 - 2 * pops[0])


@dataclass
class AnsatzState:
    n_sites: int
    probabilities: AnsatzProbabilities
    dark_states: list
    populations: list
    current: object
    digits: int


def ansatz_state(
    n_sites: int,
    hopping: float,
    interaction: float,
    tilt: float,
    coupling: float = 1.0,
    digits: int = DEFAULT_DIGITS,
) -> AnsatzState:
    """Full reverse-bias ansatz record."""
    w = _weights(n_sites, hopping, interaction, tilt, digits)
    states = [dark_state(n, n_sites, hopping, interaction, tilt, None, digits) for n in range(n_sites + 1)]
    pops = ansatz_populations(n_sites, hopping, interaction, tilt, None, -1, digits)
    cur = ansatz_current(n_sites, hopping, interaction, tilt, coupling, -1, None, digits)
    return AnsatzState(n_sites, w, states, pops, cur, digits)
