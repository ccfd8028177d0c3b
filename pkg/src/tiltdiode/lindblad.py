"""Vectorised Lindblad superoperator and its nonequilibrium steady state.

Vectorisation stacks columns: ``vec(A X B) = (B^T kron A) vec(X)``.

The Hamiltonian and the boundary jump operators conserve the particle-number
difference between ket and bra, so the steady state lives in the
equal-number blocks ``rho_{n,n}``.  Besides the full ``4^N`` matrix the
generator can be expressed on smaller exact representations, each given by
an isometry ``Q`` from real or complex coordinates into ``vec(rho)``:

``"full"``
    all of ``vec(rho)``, complex;
``"block"``
    equal-number blocks only, complex;
``"hermitian"``
    equal-number blocks in real Hermitian coordinates (the generator maps
    Hermitian matrices to Hermitian matrices, so it is real there);
``"symmetric"``
    the CP-even part of ``"hermitian"``.  On equal-number blocks the chemical
    potential drops out of the commutator, so CP is a symmetry of the
    generator for every tilt, interaction and driving.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import (
    FockBasis,
    ModelParams,
    annihilation,
    build_basis,
    build_hamiltonian,
    popcount,
)
from .symmetry import cp_image

__all__ = [
    "MAX_DENSE_DIM",
    "MAX_DIRECT_DIM",
    "MAX_SITES",
    "NessError",
    "Superoperator",
    "DensityMatrix",
    "lindbladian",
    "boundary_jumps",
    "representation_isometry",
    "build_superoperator",
    "solve_ness",
    "ness",
]

log = logging.getLogger(__name__)

MAX_DENSE_DIM = 4096
MAX_DIRECT_DIM = 16384
MAX_SITES = 10
REPRESENTATIONS = ("full", "block", "hermitian", "symmetric")


class NessError(RuntimeError):
    """Steady-state extraction failed (non-convergence or non-unique null space)."""


def lindbladian(h, jumps: Sequence) -> sp.csr_matrix:
    """Sparse generator of ``-i[H, rho] + sum_k D[L_k] rho`` (column stacking)."""
    h = sp.csr_matrix(h)
    d = h.shape[0]
    eye = sp.identity(d, format="csr", dtype=complex)
    out = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for L in jumps:
        L = sp.csr_matrix(L)
        LdL = (L.conj().T @ L).tocsr()
        out = out + sp.kron(L.conj(), L) - 0.5 * sp.kron(eye, LdL) - 0.5 * sp.kron(LdL.T, eye)
    return sp.csr_matrix(out)


def boundary_jumps(params: ModelParams, basis: FockBasis) -> list:
    """Injection/ejection operators on sites 1 and N, zero-rate ones dropped."""
    g, f, n = params.coupling, params.driving, params.n_sites
    c1, cn = annihilation(basis, 1), annihilation(basis, n)
    ops = [
        (g * (1 + f) / 8, c1.T.tocsr()),
        (g * (1 - f) / 8, cn.T.tocsr()),
        (g * (1 - f) / 8, c1),
        (g * (1 + f) / 8, cn),
    ]
    return [np.sqrt(rate) * op for rate, op in ops if rate > 0]


def _equal_number_pairs(n_sites: int):
    pc = popcount(np.arange(2**n_sites))
    a, b = np.nonzero(pc[:, None] == pc[None, :])
    return a, b


def representation_isometry(n_sites: int, kind: str) -> sp.csc_matrix:
    """Columns form an orthonormal (real inner product) basis of the chosen
    subspace of ``vec(rho)``; coordinates are ``Re(Q^H vec(rho))``."""
    d = 2**n_sites
    if kind == "full":
        return sp.identity(d * d, dtype=complex, format="csc")
    a, b = _equal_number_pairs(n_sites)
    if kind == "block":
        idx = np.sort(a + d * b)
        return sp.csc_matrix(
            (np.ones(len(idx), dtype=complex), (idx, np.arange(len(idx)))), shape=(d * d, len(idx))
        )
    if kind not in ("hermitian", "symmetric"):
        raise ValueError(f"unknown representation {kind!r}; choose from {REPRESENTATIONS}")
    diag = a[a == b]
    lo, hi = a[a < b], b[a < b]
    r2 = 1 / np.sqrt(2)
    # coordinates: [diag..., u(pairs)..., v(pairs)...]
    n_d, n_p = len(diag), len(lo)
    rows = np.concatenate([diag + d * diag, lo + d * hi, hi + d * lo, lo + d * hi, hi + d * lo])
    cols = np.concatenate(
        [np.arange(n_d), n_d + np.arange(n_p), n_d + np.arange(n_p),
         n_d + n_p + np.arange(n_p), n_d + n_p + np.arange(n_p)]
    )
    vals = np.concatenate(
        [np.ones(n_d), np.full(n_p, r2), np.full(n_p, r2), np.full(n_p, 1j * r2), np.full(n_p, -1j * r2)]
    ).astype(complex)
    q = sp.csc_matrix((vals, (rows, cols)), shape=(d * d, n_d + 2 * n_p))
    if kind == "hermitian":
        return q
    return (q @ _cp_even_combinations(n_sites, diag, lo, hi)).tocsc()


def _cp_even_combinations(n_sites, diag, lo, hi) -> sp.csc_matrix:
    """Real matrix whose columns span the CP-even coordinates."""
    n_d, n_p = len(diag), len(lo)
    u = np.array([cp_image(int(s), n_sites) for s in range(2**n_sites)])
    pos_diag = {int(s): i for i, s in enumerate(diag)}
    pos_pair = {(int(x), int(y)): i for i, (x, y) in enumerate(zip(lo, hi))}
    image = np.empty(n_d + 2 * n_p, dtype=np.int64)
    sign = np.ones(n_d + 2 * n_p)
    for i, s in enumerate(diag):
        image[i] = pos_diag[int(u[s])]
    for i, (x, y) in enumerate(zip(lo, hi)):
        ux, uy = int(u[x]), int(u[y])
        j = pos_pair[(min(ux, uy), max(ux, uy))]
        image[n_d + i] = n_d + j
        image[n_d + n_p + i] = n_d + n_p + j
        if ux > uy:
            sign[n_d + n_p + i] = -1.0
    rows, cols, vals = [], [], []
    col = 0
    for i in range(len(image)):
        j = image[i]
        if j < i:
            continue
        if j == i:
            if sign[i] < 0:
                continue
            rows.append(i), cols.append(col), vals.append(1.0)
        else:
            r2 = 1 / np.sqrt(2)
            rows += [i, j]
            cols += [col, col]
            vals += [r2, sign[i] * r2]
        col += 1
    return sp.csc_matrix((vals, (rows, cols)), shape=(len(image), col))


@dataclass
class Superoperator:
    """Lindblad generator in a chosen representation (see module docstring).

    ``isometry`` maps representation coordinates ``x`` to ``vec(rho) = Q x``.
    """

    matrix: sp.csr_matrix
    n_sites: int
    params: Optional[ModelParams] = None
    isometry: Optional[sp.csc_matrix] = None
    kind: str = "full"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return self.kind in ("hermitian", "symmetric")

    def vectorize(self, rho: np.ndarray) -> np.ndarray:
        v = np.asarray(rho, dtype=complex).reshape(-1, order="F")
        if self.isometry is None:
            return v
        x = self.isometry.conj().T @ v
        return x.real if self.is_real else x

    def unvectorize(self, x: np.ndarray) -> np.ndarray:
        d = 2**self.n_sites
        v = x if self.isometry is None else self.isometry @ x
        return np.asarray(v, dtype=complex).reshape(d, d, order="F")

    def trace_functional(self) -> np.ndarray:
        return self.vectorize(np.eye(2**self.n_sites))


def represent(L: sp.spmatrix, n_sites: int, kind: str):
    """Express a full generator in representation ``kind``."""
    if kind == "full":
        return sp.csr_matrix(L), None
    q = representation_isometry(n_sites, kind)
    m = (q.conj().T @ (L @ q)).tocsr()
    if kind in ("hermitian", "symmetric"):
        m = m.real.tocsr()
    m.eliminate_zeros()
    return m, q


def build_superoperator(params: ModelParams, kind: str = "symmetric") -> Superoperator:
    n = params.n_sites
    if n > MAX_SITES:
        raise ValueError(
            f"N={n} gives a 4^{n}={4**n} dimensional superoperator; the limit is N<={MAX_SITES}"
        )
    basis = build_basis(n)
    h = build_hamiltonian(params, basis, sparse=True)
    L = lindbladian(h, boundary_jumps(params, basis))
    m, q = represent(L, n, kind)
    return Superoperator(m, n, params, q, kind)


@dataclass
class DensityMatrix:
    matrix: np.ndarray
    n_sites: int
    residual: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def check(self, herm_tol=1e-10, trace_tol=1e-10, pos_tol=1e-8) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > herm_tol:
            raise NessError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > trace_tol:
            raise NessError(f"trace {np.trace(m).real} differs from 1")
        lam = np.linalg.eigvalsh(m).min()
        if lam < -pos_tol:
            raise NessError(f"density matrix has eigenvalue {lam:.3e}")


def _norm1(m: sp.spmatrix) -> float:
    return float(abs(m).sum(axis=0).max())


def _finish(superop: Superoperator, x: np.ndarray) -> DensityMatrix:
    rho = superop.unvectorize(x)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho).real
    res = np.linalg.norm(superop.matrix @ superop.vectorize(rho), 1)
    return DensityMatrix(rho, superop.n_sites, float(res))


def _solve_dense(superop: Superoperator) -> np.ndarray:
    L = superop.matrix.toarray()
    vals, vecs = np.linalg.eig(L)
    order = np.argsort(np.abs(vals))
    scale = np.abs(L).sum(axis=0).max()
    lam0, lam1 = abs(vals[order[0]]), abs(vals[order[1]])
    if lam1 <= max(10 * lam0, 1e-13 * scale):
        raise NessError(
            f"null space dimension > 1: |lambda_0|={lam0:.2e}, |lambda_1|={lam1:.2e}"
        )
    x = vecs[:, order[0]]
    t = superop.trace_functional()
    x = x / (t @ x)
    return x.real if superop.is_real else x


def bordered_matrix(superop: Superoperator):
    """``L + e_p t^T`` and the pivot row ``p``.

    ``t`` (the trace functional) is a left null vector of every Lindbladian,
    so the bordered matrix is regular exactly when the null space is one
    dimensional, and ``(L + e_p t^T) x = e_p`` yields the unit-trace
    steady state.
    """
    L = superop.matrix.tocsc()
    t = superop.trace_functional()
    nz = np.nonzero(np.abs(t) > 1e-14)[0]
    p = int(nz[0])
    border = sp.csc_matrix((t[nz], (np.full(len(nz), p), nz)), shape=L.shape)
    return (L + border).tocsc(), p


def _solve_sparse(superop: Superoperator, refine: int = 2) -> np.ndarray:
    A, p = bordered_matrix(superop)
    rhs = np.zeros(A.shape[0], dtype=A.dtype)
    rhs[p] = 1.0
    try:
        lu = spla.splu(A, permc_spec="MMD_ATA")
    except RuntimeError as exc:
        raise NessError(f"null space dimension > 1 (bordered system singular): {exc}") from exc
    x = lu.solve(rhs)
    for _ in range(refine):
        x = x + lu.solve(rhs - A @ x)
    if not np.all(np.isfinite(x)):
        raise NessError("bordered solve produced non-finite values")
    return x


def _solve_direct(superop: Superoperator, refine: int = 2) -> np.ndarray:
    """Dense LU of the bordered generator; beats sparse LU once fill-in is near dense."""
    if superop.dim > MAX_DIRECT_DIM:
        raise ValueError(f"direct solve limited to dimension {MAX_DIRECT_DIM}")
    A, p = bordered_matrix(superop)
    dense = A.toarray()
    rhs = np.zeros(A.shape[0], dtype=A.dtype)
    rhs[p] = 1.0
    factor = sla.lu_factor(dense, check_finite=False)
    piv = np.abs(np.diag(factor[0]))
    if piv.min() <= 1e-14 * piv.max():
        raise NessError("null space dimension > 1 (bordered system singular)")
    x = sla.lu_solve(factor, rhs, check_finite=False)
    for _ in range(refine):
        x = x + sla.lu_solve(factor, rhs - A @ x, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise NessError("bordered solve produced non-finite values")
    return x


def solve_ness(superop: Superoperator, method: str = "auto", tol: float = 1e-9) -> DensityMatrix:
    """Unit-trace Hermitian steady state of ``superop``.

    ``method`` is ``"dense"`` (full eigendecomposition), ``"iterative"``
    (sparse LU of the trace-bordered generator, with refinement),
    ``"direct"`` (dense LU of the same bordered system) or ``"auto"``
    (dense up to dimension 400, sparse LU beyond).
    """
    if method == "auto":
        method = "dense" if superop.dim <= 400 else "iterative"
    if method == "dense":
        if superop.dim > MAX_DENSE_DIM:
            raise ValueError(f"dense solve limited to dimension {MAX_DENSE_DIM}")
        x = _solve_dense(superop)
    elif method == "iterative":
        x = _solve_sparse(superop)
    elif method == "direct":
        x = _solve_direct(superop)
    else:
        raise ValueError(f"unknown method {method!r}")
    rho = _finish(superop, x)
    bound = tol * _norm1(superop.matrix)
    if rho.residual > bound:
        raise NessError(f"residual {rho.residual:.3e} exceeds {bound:.3e}")
    return rho


def ness(params: ModelParams, method: str = "auto", kind: str = "symmetric") -> DensityMatrix:
    return solve_ness(build_superoperator(params, kind), method)
