"""Exact free quantum evolution of the generated state over the full structure.

After the pump leaves, the state evolves under the free (lossy, non-Hermitian)
Hamiltonian.  In the quasi-mode basis the single-cavity ladder operators
propagate linearly,

    a(t) = Phi(t) a(t0),      Phi(t) = W^dag O F(t) P V^dag,

with ``F = diag(exp(-i omega_mu (t - t0)))``.  The mode non-orthogonality
enters through O and P; replacing both by the identity gives the orthogonal
approximation.  Since ``W^dag O = B V`` and ``P V^dag = W B^{-1}``, Phi is the
B-similarity transform of the classical propagator, which makes the semigroup
property exact.

All second-moment observables follow from the two moment matrices at the
handoff time, ``<a_p a_q>`` and ``<a_p^dag a_q>``, supported on the resonant
structure's cavities.  The correlation variance between a signal cavity p_S
measured at t_S and an idler cavity p_I measured at t_I is

    D2 = (B_pSpS + B_pIpI)/2
         + sum_qq' [conj(Phi_S)_pSq Phi_S_pSq' + conj(Phi_I)_pIq Phi_I_pIq'] <a_q^dag a_q'>
         - 2 Re{ e^{i phi} sum_qq' Phi_S_pSq Phi_I_pIq' <a_q a_q'> },

where phi is the local-oscillator phase; extremizing analytically over phi
yields the slowly varying envelope bounds.
"""

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import FitQualityWarning, InputError, RoleError, WindowTooShortError
from .generation import GenerationState, LossRates, total_photon_numbers
from .modes import QuasiModeBasis, RSBasis


@dataclass(frozen=True)
class MomentMatrices:
    """Second moments ``<a_p a_q>`` and ``<a_p^dag a_q>`` at the handoff time.

    Both are dense N x N but supported only on the resonant structure's rows
    and columns (``rs_indices``), which the observable evaluators exploit.
    """

    M_aa: np.ndarray
    M_ada: np.ndarray
    rs_indices: tuple

    @property
    def n(self) -> int:
        return self.M_aa.shape[0]

    def rs_block_aa(self) -> np.ndarray:
        idx = np.asarray(self.rs_indices)
        return self.M_aa[np.ix_(idx, idx)]

    def rs_block_ada(self) -> np.ndarray:
        idx = np.asarray(self.rs_indices)
        return self.M_ada[np.ix_(idx, idx)]


@dataclass(frozen=True)
class Propagator:
    """Single-cavity operator propagator for one elapsed time."""

    Phi: np.ndarray
    elapsed: float


class FreePropagation:
    """Cached factors for repeated propagator evaluations on one basis.

    ``Phi(t) = L diag(exp(-i omega t)) R`` with ``L = W^dag O`` and
    ``R = P V^dag`` (identity-replaced under the orthogonal approximation).
    """

    def __init__(self, basis: QuasiModeBasis, orthogonal_approx: bool = False):
        self.basis = basis
        self.freqs = basis.freqs
        if orthogonal_approx:
            self.L = basis.W.conj().T
            self.R = basis.V.conj().T
        else:
            self.L = basis.W.conj().T @ basis.O
            self.R = basis.P @ basis.V.conj().T
        self.orthogonal_approx = orthogonal_approx

    def phi(self, elapsed: float) -> np.ndarray:
        f = np.exp(-1j * self.freqs * elapsed)
        return (self.L * f[np.newaxis, :]) @ self.R

    def phi_rows(self, rows: Sequence[int], elapsed: float, cols: Optional[Sequence[int]] = None) -> np.ndarray:
        """Selected rows (and optionally columns) of Phi, cheap for small counts."""
        f = np.exp(-1j * self.freqs * elapsed)
        left = self.L[np.asarray(rows), :] * f[np.newaxis, :]
        right = self.R if cols is None else self.R[:, np.asarray(cols)]
        return left @ right


def propagator(basis: QuasiModeBasis, elapsed: float, orthogonal_approx: bool = False) -> Propagator:
    """Full propagator matrix for one elapsed time (a/(2 pi c) units)."""
    if elapsed < 0:
        raise InputError("elapsed time must be non-negative")
    return Propagator(Phi=FreePropagation(basis, orthogonal_approx).phi(elapsed), elapsed=elapsed)


def initial_moments(state: GenerationState, rs: RSBasis, n_total: int, rs_indices: Sequence[int]) -> MomentMatrices:
    """Moment matrices of the generated state, supported on the RS cavities.

    With sigma_pj the (cavity p, mode j) elements of the inverse RS expansion
    (row j of ``Sigma = U^{-1}``):

        <a_p a_q>      = -(sigma*_pS sigma*_qI + sigma*_pI sigma*_qS)
                          (n_S^th + n_I^th + 1) e^{i theta} cosh r sinh r
        <a_p^dag a_q>  = sigma_pS sigma*_qS [n_S^th ch^2 + (1+n_I^th) sh^2]
                         + sigma_pI sigma*_qI [n_I^th ch^2 + (1+n_S^th) sh^2]
    """
    rs_indices = tuple(int(i) for i in rs_indices)
    if len(rs_indices) != 3:
        raise InputError("rs_indices must list the three RS cavity positions")
    sig_s = rs.sigma_row(rs.IDX_S)      # sigma_pS over the three RS cavities
    sig_i = rs.sigma_row(rs.IDX_I)

    ch, sh = np.cosh(state.r), np.sinh(state.r)
    total = state.n_th_S + state.n_th_I + 1.0
    pair_amp = total * np.exp(1j * state.theta) * ch * sh
    n_s, n_i = total_photon_numbers(state)

    aa_rs = -(np.outer(sig_s.conj(), sig_i.conj()) + np.outer(sig_i.conj(), sig_s.conj())) * pair_amp
    ada_rs = np.outer(sig_s, sig_s.conj()) * n_s + np.outer(sig_i, sig_i.conj()) * n_i

    m_aa = np.zeros((n_total, n_total), dtype=complex)
    m_ada = np.zeros((n_total, n_total), dtype=complex)
    idx = np.asarray(rs_indices)
    m_aa[np.ix_(idx, idx)] = aa_rs
    m_ada[np.ix_(idx, idx)] = ada_rs
    return MomentMatrices(M_aa=m_aa, M_ada=m_ada, rs_indices=rs_indices)


def _phi_matrix(phi) -> np.ndarray:
    return phi.Phi if isinstance(phi, Propagator) else np.asarray(phi)


def photon_number(phi, moments: MomentMatrices, p: int) -> float:
    """Photon number in cavity row ``p``:
    ``n_p = sum_qq' conj(Phi_pq) Phi_pq' <a_q^dag a_q'>``."""
    mat = _phi_matrix(phi)
    idx = np.asarray(moments.rs_indices)
    row = mat[p, idx]
    val = row.conj() @ moments.rs_block_ada() @ row
    return float(val.real)


def photon_numbers(phi, moments: MomentMatrices) -> np.ndarray:
    """Photon number in every cavity at one time."""
    mat = _phi_matrix(phi)
    idx = np.asarray(moments.rs_indices)
    rows = mat[:, idx]
    return np.einsum("pa,ab,pb->p", rows.conj(), moments.rs_block_ada(), rows).real


def _cv_terms(phi_s, phi_i, moments: MomentMatrices, B: np.ndarray, p_s: int, p_i: int):
    mat_s = _phi_matrix(phi_s)
    mat_i = _phi_matrix(phi_i)
    idx = np.asarray(moments.rs_indices)
    row_s = mat_s[p_s, idx]
    row_i = mat_i[p_i, idx]
    ada = moments.rs_block_ada()
    aa = moments.rs_block_aa()
    const = 0.5 * float(B[p_s, p_s].real + B[p_i, p_i].real)
    n_term = float((row_s.conj() @ ada @ row_s + row_i.conj() @ ada @ row_i).real)
    pair = complex(row_s @ aa @ row_i)
    return const, n_term, pair


def correlation_variance(
    phi_s,
    phi_i,
    moments: MomentMatrices,
    B: np.ndarray,
    p_s: int,
    p_i: int,
    lo_phase: float = 0.0,
    roles: Optional[dict] = None,
) -> float:
    """Correlation variance between two cavities at independent times.

    ``phi_s`` and ``phi_i`` are the propagators at the two measurement times;
    ``lo_phase`` rotates the pair term (0 reproduces the bare expression).
    When a ``roles`` map (matrix row -> role string) is provided, the rows are
    checked to lie in the signal and idler waveguides respectively.
    """
    if roles is not None:
        if roles.get(p_s) != "signal_crow":
            raise RoleError(f"row {p_s} is not a signal waveguide cavity")
        if roles.get(p_i) != "idler_crow":
            raise RoleError(f"row {p_i} is not an idler waveguide cavity")
    const, n_term, pair = _cv_terms(phi_s, phi_i, moments, B, p_s, p_i)
    return const + n_term - 2.0 * float(np.real(np.exp(1j * lo_phase) * pair))


def cv_envelope(phi_s, phi_i, moments: MomentMatrices, B: np.ndarray, p_s: int, p_i: int):
    """Envelope bounds of the correlation variance over the free phase:
    ``(lower, upper) = const + n_term -/+ 2 |pair term|``."""
    const, n_term, pair = _cv_terms(phi_s, phi_i, moments, B, p_s, p_i)
    swing = 2.0 * abs(pair)
    return const + n_term - swing, const + n_term + swing


def cv_envelope_series(
    basis: QuasiModeBasis,
    moments: MomentMatrices,
    B: np.ndarray,
    p_s: int,
    p_i: int,
    elapsed_s: np.ndarray,
    elapsed_i: np.ndarray,
    orthogonal_approx: bool = False,
):
    """Envelope bounds along paired measurement-time grids (vectorized)."""
    elapsed_s = np.asarray(elapsed_s, dtype=float)
    elapsed_i = np.asarray(elapsed_i, dtype=float)
    if elapsed_s.shape != elapsed_i.shape:
        raise InputError("elapsed_s and elapsed_i must have matching shapes")
    prop = FreePropagation(basis, orthogonal_approx)
    idx = np.asarray(moments.rs_indices)
    ada = moments.rs_block_ada()
    aa = moments.rs_block_aa()
    const = 0.5 * float(B[p_s, p_s].real + B[p_i, p_i].real)

    l_s = prop.L[p_s, :]
    l_i = prop.L[p_i, :]
    r_rs = prop.R[:, idx]
    ph_s = np.exp(-1j * np.outer(elapsed_s, prop.freqs))
    ph_i = np.exp(-1j * np.outer(elapsed_i, prop.freqs))
    rows_s = (ph_s * l_s[np.newaxis, :]) @ r_rs        # (T, 3)
    rows_i = (ph_i * l_i[np.newaxis, :]) @ r_rs

    n_term = (
        np.einsum("ta,ab,tb->t", rows_s.conj(), ada, rows_s)
        + np.einsum("ta,ab,tb->t", rows_i.conj(), ada, rows_i)
    ).real
    pair = np.einsum("ta,ab,tb->t", rows_s, aa, rows_i)
    swing = 2.0 * np.abs(pair)
    return const + n_term - swing, const + n_term + swing


def photon_number_series(
    basis: QuasiModeBasis,
    moments: MomentMatrices,
    rows: Sequence[int],
    elapsed: np.ndarray,
    orthogonal_approx: bool = False,
) -> np.ndarray:
    """Photon numbers for selected cavities over a grid of elapsed times.

    Returns shape (len(rows), len(elapsed)).
    """
    prop = FreePropagation(basis, orthogonal_approx)
    idx = np.asarray(moments.rs_indices)
    ada = moments.rs_block_ada()
    r_rs = prop.R[:, idx]
    out = np.empty((len(rows), len(elapsed)))
    phases = np.exp(-1j * np.outer(np.asarray(elapsed, dtype=float), prop.freqs))
    for k, p in enumerate(rows):
        rs_rows = (phases * prop.L[p, :][np.newaxis, :]) @ r_rs            # (T, 3)
        out[k] = np.einsum("ta,ab,tb->t", rs_rows.conj(), ada, rs_rows).real
    return out


def loaded_decay_rate(
    basis: QuasiModeBasis,
    rs: RSBasis,
    mode: str,
    fit_window=(0.2, 0.9),
    residual_threshold: float = 0.05,
    n_samples: int = 400,
    max_doublings: int = 12,
):
    """Loaded power decay rate of one RS mode from an exponential fit.

    Starts with one photon in the chosen RS mode (``'I' | 'P' | 'S'``),
    propagates the second moments through the full basis, projects the photon
    number back onto that mode, and fits ``ln n(t)`` over the window where the
    population lies inside ``fit_window``.  Returns ``(Gamma, residual)`` with
    Gamma in 2*pi*c/a units; a residual above threshold emits
    ``FitQualityWarning``.
    """
    which = {"I": rs.IDX_I, "P": rs.IDX_P, "S": rs.IDX_S}
    if mode not in which:
        raise InputError(f"mode must be one of I, P, S, got {mode!r}")
    j = which[mode]
    sig_j = rs.sigma_row(j)
    m0 = np.outer(sig_j, sig_j.conj())                 # <a_p^dag a_q> on the RS block
    u_j = rs.U[:, j]

    rs_rows = [list(basis.ids).index(cid) for cid in rs.ids]
    prop = FreePropagation(basis)
    l_rs = prop.L[np.asarray(rs_rows), :]
    r_rs = prop.R[:, np.asarray(rs_rows)]

    gamma0 = max(-2.0 * float(basis.freqs.imag.min()), 1e-12)
    t_end = 2.0 / gamma0

    def population(ts):
        vals = np.empty(len(ts))
        for k, t in enumerate(ts):
            f = np.exp(-1j * prop.freqs * t)
            phi_rs = (l_rs * f[np.newaxis, :]) @ r_rs      # 3x3 block of Phi
            w = u_j.conj() @ phi_rs
            vals[k] = float((w.conj() @ m0 @ w).real)
        return vals

    lo, hi = fit_window
    for _ in range(max_doublings):
        ts = np.linspace(0.0, t_end, n_samples)
        n_t = population(ts)
        if n_t[-1] < lo:
            break
        t_end *= 2.0
    else:
        raise WindowTooShortError("population never decayed into the fit window")

    mask = (n_t >= lo) & (n_t <= hi) & (ts > 0)
    if np.count_nonzero(mask) < 4:
        raise WindowTooShortError("too few samples inside the fit window")
    slope, intercept = np.polyfit(ts[mask], np.log(n_t[mask]), 1)
    resid = float(np.std(np.log(n_t[mask]) - (slope * ts[mask] + intercept)))
    if resid > residual_threshold:
        warnings.warn(
            f"decay of RS mode {mode} is not cleanly exponential (residual {resid:.3f})",
            FitQualityWarning,
            stacklevel=2,
        )
    return float(-slope), resid


def loaded_rates(basis: QuasiModeBasis, rs: RSBasis, **kwargs) -> LossRates:
    """Loaded decay rates of all three RS modes on one basis."""
    gs, _ = loaded_decay_rate(basis, rs, "S", **kwargs)
    gi, _ = loaded_decay_rate(basis, rs, "I", **kwargs)
    gp, _ = loaded_decay_rate(basis, rs, "P", **kwargs)
    return LossRates(Gamma_S=gs, Gamma_I=gi, Gamma_P=gp)
