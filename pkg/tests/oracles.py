"""Independent reference solutions used by the test suite.

None of these share code with the package solvers.
"""

import mpmath as mp
import numpy as np
from scipy.linalg import solve_sylvester


def correlation_matrix(n, tilt, coupling=1.0, driving=1.0, hopping=1.0):
    """Two-point function X_ij = <c_j^dag c_i> of the quadratic chain from its
    Lyapunov equation; returns (populations, current on bond 1)."""
    h = np.diag(tilt / 2 * np.arange(1, n + 1)) + np.diag(np.full(n - 1, hopping / 2), 1)
    h = h + np.triu(h, 1).T
    gain = np.zeros(n)
    loss = np.zeros(n)
    gain[0], loss[0] = coupling * (1 + driving) / 8, coupling * (1 - driving) / 8
    gain[-1], loss[-1] = coupling * (1 - driving) / 8, coupling * (1 + driving) / 8
    a = -1j * h - np.diag(gain + loss) / 2
    x = solve_sylvester(a, a.conj().T, -np.diag(gain))
    return np.real(np.diag(x)), hopping * np.imag(x[0, 1])


def landauer_current(n, tilt, coupling=1.0, driving=1.0, hopping=1.0, dps=60):
    """Current of the quadratic chain as a transmission integral,
    gamma^2 f / (2 pi) * int |G_1N(w)|^2 dw, evaluated exactly by residues
    over the eigenvalues of the non-Hermitian effective Hamiltonian."""
    with mp.workdps(dps):
        hm = mp.matrix(n, n)
        for j in range(n):
            hm[j, j] = mp.mpf(tilt) / 2 * (j + 1)
        for j in range(n - 1):
            hm[j, j + 1] = hm[j + 1, j] = mp.mpf(hopping) / 2
        g = mp.mpf(coupling) / 4
        hm[0, 0] -= 1j * g / 2
        hm[n - 1, n - 1] -= 1j * g / 2
        z = mp.eig(hm, left=False, right=False)
        total = 0
        for j in range(n):
            w = mp.conj(z[j])
            den = 1
            for i in range(n):
                den *= w - z[i]
                if i != j:
                    den *= w - mp.conj(z[i])
            total += 1 / den
        integral = 2j * mp.pi * total
        amp = (mp.mpf(hopping) / 2) ** (2 * (n - 1))
        return mp.re(g * g * driving * amp * integral / (2 * mp.pi))
