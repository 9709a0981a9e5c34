"""Quasi-modes of a coupled-cavity system.

The leaky modes of the coupled structure are expansions ``N_mu = sum_q v_qmu M_q``
over single-cavity modes.  The expansion coefficients and complex frequencies
solve the generalized eigenvalue problem::

    A @ Omega @ V = B @ V @ Lambda,   Omega = diag(Omega_q^2),  Lambda = diag(omega_mu^2)

with A the single-cavity overlap matrix and B the coupling matrix.  Because the
problem is non-Hermitian the resulting modes are generally non-orthogonal; their
Gram matrix under the dielectric-weighted inner product is ``O = V^dag B V``,
and its inverse P enters the exact free propagator.

Conventions fixed here (the physics fixes neither):
  * complex frequencies are the principal square roots of the Lambda
    eigenvalues, required to have positive real part;
  * eigenvector columns are scaled so that O has unit diagonal, with the
    dominant coefficient of each column rotated to the positive real axis;
  * modes are sorted by ascending real frequency, ties broken by the cavity
    index of the dominant coefficient.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import BranchError, ConditioningError, LayoutError
from .layout import ComplexFrequency, SystemLayout, TightBindingMatrices, assemble_matrices

DEFAULT_COND_THRESHOLD = 1e8


@dataclass(frozen=True)
class QuasiModeBasis:
    """Eigen-data of a coupled system.

    V holds expansion coefficients (column mu = mode mu over cavities),
    W = V^-1, O = V^dag B V with unit diagonal, P = O^-1.  ``freqs`` is the
    complex frequency array ``omega_mu - i gamma_mu`` in 2*pi*c/a units.
    """

    V: np.ndarray
    W: np.ndarray
    freqs: np.ndarray
    O: np.ndarray
    P: np.ndarray
    ids: tuple

    @property
    def n(self) -> int:
        return len(self.freqs)

    def frequency(self, mu: int) -> ComplexFrequency:
        w = self.freqs[mu]
        return ComplexFrequency(omega=float(w.real), gamma=float(-w.imag))


@dataclass(frozen=True)
class RSBasis:
    """Quasi-mode basis of the three-cavity resonant structure.

    Columns of U are ordered (idler, pump, signal) by ascending real frequency;
    Sigma = U^-1.  ``ids`` are the RS cavity ids in matrix (row) order.
    """

    U: np.ndarray
    Sigma: np.ndarray
    freqs: np.ndarray
    ids: tuple

    IDX_I, IDX_P, IDX_S = 0, 1, 2

    @property
    def omega_I(self) -> complex:
        return self.freqs[self.IDX_I]

    @property
    def omega_P(self) -> complex:
        return self.freqs[self.IDX_P]

    @property
    def omega_S(self) -> complex:
        return self.freqs[self.IDX_S]

    def sigma_row(self, which: int) -> np.ndarray:
        """Row of Sigma for one mode: the coefficients sigma_pj with j fixed."""
        return self.Sigma[which, :]


def _sqrt_branch(lams: np.ndarray) -> np.ndarray:
    roots = np.sqrt(lams.astype(complex))
    bad = roots.real <= 0
    if np.any(bad):
        raise BranchError(
            f"eigenvalue(s) {lams[bad]} have square roots with non-positive real part"
        )
    return roots


def _dominant_index(col: np.ndarray) -> int:
    mags = np.abs(col)
    return int(np.argmax(mags))


def _b_orthogonalize_clusters(V: np.ndarray, lams: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Gram-Schmidt within degenerate eigenvalue clusters under the B inner product."""
    scale = np.max(np.abs(lams)) or 1.0
    order = np.argsort(lams.real)
    V = V.copy()
    i = 0
    while i < len(lams):
        j = i + 1
        while j < len(lams) and abs(lams[order[j]] - lams[order[i]]) <= 1e-10 * scale:
            j += 1
        if j - i > 1:
            idx = order[i:j]
            for k, col_k in enumerate(idx):
                v = V[:, col_k]
                for col_m in idx[:k]:
                    u = V[:, col_m]
                    denom = u.conj() @ B @ u
                    v = v - (u.conj() @ B @ v) / denom * u
                V[:, col_k] = v
        i = j
    return V


def solve_modes(m: TightBindingMatrices, cond_threshold: float = DEFAULT_COND_THRESHOLD) -> QuasiModeBasis:
    """Solve the generalized eigenproblem and return the normalized mode basis.

    The problem is reduced to the standard form ``(B^-1 A Omega) V = V Lambda``
    through a dense solve, guarded by the condition number of B.
    """
    cond = m.cond_B
    if cond > cond_threshold:
        raise ConditioningError(cond, cond_threshold)

    M = la.solve(m.B, m.A * m.omega_diag[np.newaxis, :])
    lams, V = la.eig(M)
    freqs = _sqrt_branch(lams)

    V = _b_orthogonalize_clusters(V, lams, m.B)

    # normalize so O_mumu = 1, then pin each column's phase for determinism
    diag = np.einsum("qm,qp,pm->m", V.conj(), m.B, V)
    V = V / np.sqrt(diag.astype(complex))[np.newaxis, :]
    for mu in range(V.shape[1]):
        k = _dominant_index(V[:, mu])
        ph = V[k, mu] / abs(V[k, mu])
        V[:, mu] = V[:, mu] / ph

    order = sorted(
        range(len(freqs)),
        key=lambda mu: (freqs[mu].real, _dominant_index(V[:, mu])),
    )
    V = V[:, order]
    freqs = freqs[order]

    W = la.inv(V)
    O = overlap_matrix(V, m.B)
    P = la.inv(O)
    return QuasiModeBasis(V=V, W=W, freqs=freqs, O=O, P=P, ids=m.ids)


def overlap_matrix(V: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Gram matrix O_munu = V_mu^dag B V_nu of the mode expansion columns."""
    if V.shape[0] != B.shape[0] or B.shape[0] != B.shape[1]:
        raise ValueError(f"dimension mismatch: V {V.shape}, B {B.shape}")
    return V.conj().T @ B @ V


def rs_basis(layout: SystemLayout, cond_threshold: float = DEFAULT_COND_THRESHOLD) -> RSBasis:
    """Solve the isolated resonant structure and label its modes I/P/S.

    The layout must contain exactly one cavity for each rs_* role.  Labels are
    assigned in ascending real frequency: idler < pump < signal.
    """
    rs_ids = layout.rs_ids
    if len(rs_ids) != 3:
        raise LayoutError(f"layout must contain exactly 3 rs_* cavities, found {len(rs_ids)}")
    roles = sorted(layout.role_of(cid) for cid in rs_ids)
    if roles != ["rs_center", "rs_left", "rs_right"]:
        raise LayoutError(f"resonant structure roles incomplete: {roles}")
    basis = solve_modes(assemble_matrices(layout, rs_ids), cond_threshold)
    return RSBasis(U=basis.V, Sigma=basis.W, freqs=basis.freqs, ids=basis.ids)


def crow_dispersion(omega0: ComplexFrequency, a01: complex, b01: complex, kd: float) -> ComplexFrequency:
    """Bloch-mode complex frequency of an infinite waveguide chain.

    In the nearest-neighbor tight-binding approximation::

        omega(k) = Omega0 * (1 + (A01 - B01) * cos(k d))

    ``kd`` is the Bloch wavenumber times the chain period, restricted to the
    first Brillouin zone [-pi, pi].
    """
    if abs(kd) > np.pi + 1e-12:
        raise ValueError(f"|kd| must be <= pi, got {kd}")
    w = omega0.as_complex * (1.0 + (a01 - b01) * np.cos(kd))
    return ComplexFrequency(omega=float(w.real), gamma=float(-w.imag))
