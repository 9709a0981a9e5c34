"""Independent brute-force references used by the test suite.

Two oracles live here, deliberately avoiding the analytic shortcuts of the
main code paths:

* a truncated-Fock two-mode Lindblad integrator for the squeezed-state
  generation dynamics (direct density-matrix evolution, parameters recovered
  by inverting the Gaussian moment relations);
* a dense adaptive ODE integrator for the linear coupled-mode dynamics,
  replacing the diagonal-phase propagator with numerical time stepping.

Fock-basis simulation is viable only for the two resonant modes; the photon
count per mode stays well below ten in the regimes of interest, so a cutoff
of order twelve converges.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import CutoffError, InputError, StiffnessError
from .layout import TightBindingMatrices
from .modes import solve_modes


@dataclass(frozen=True)
class FockState2M:
    """Two-mode density operator in the truncated number basis."""

    cutoff: int
    rho: np.ndarray

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** 2

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    @property
    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)


@dataclass
class FockTrajectory:
    """Extracted squeezed-thermal parameters along the Fock evolution."""

    t_tilde: np.ndarray
    r: np.ndarray
    n_th_S: np.ndarray
    n_th_I: np.ndarray
    theta: np.ndarray
    n_S: np.ndarray             # raw total photon numbers <dS^dag dS>
    n_I: np.ndarray
    m_SI: np.ndarray            # raw pair correlator <dS dI>
    final_state: FockState2M


def _mode_ops(cutoff: int):
    n = cutoff + 1
    a = sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr")
    eye = sp.identity(n, format="csr")
    d_s = sp.kron(a, eye, format="csr")
    d_i = sp.kron(eye, a, format="csr")
    return d_s, d_i


def extract_gaussian_parameters(n_s: float, n_i: float, m: complex):
    """Invert the moment relations of a two-mode squeezed thermal state.

    For such a state ``n_S = a ch^2 + (b+1) sh^2``, ``n_I = b ch^2 + (a+1) sh^2``
    and ``<d_S d_I> = -(a+b+1) e^{i theta} ch sh``.  Closed-form elimination:
    with C = n_S + n_I + 1 and M = |m|, the thermal-sum factor is
    ``T = sqrt(C^2 - 4 M^2)``, then ``r = asinh(2M / T) / 2``,
    ``a - b = n_S - n_I`` and ``a + b = T - 1``.
    """
    c_sum = n_s + n_i + 1.0
    m_abs = abs(m)
    under = c_sum**2 - 4.0 * m_abs**2
    if under <= 0:
        raise InputError(f"moments violate the physicality bound: C^2-4M^2 = {under:.3e}")
    t_factor = np.sqrt(under)
    r = 0.5 * np.arcsinh(2.0 * m_abs / t_factor)
    diff = n_s - n_i
    a = 0.5 * (t_factor - 1.0 + diff)
    b = 0.5 * (t_factor - 1.0 - diff)
    theta = float(np.angle(-m)) if m_abs > 0 else 0.0
    return float(r), float(a), float(b), theta


def lindblad_fock(
    g_samples,
    g_t_tilde,
    zeta: float,
    drive_phase: float,
    cutoff: int,
    t_tilde_grid,
    dt_max: float = 1e-3,
    loss_scale: float = 1.0,
    truncation_tol: float = 1e-6,
) -> FockTrajectory:
    """RK4 integration of the two-mode master equation in a truncated basis.

    Works in the frame rotating at the mode frequencies, where the drive phase
    is constant::

        drho/dt~ = -i (g/2) [e^{i phi} dS^dag dI^dag + e^{-i phi} dS dI, rho]
                   + loss_scale [ (1+zeta) D[dS] rho + (1-zeta) D[dI] rho ]

    starting from two-mode vacuum.  The population of the highest retained
    number level is monitored; exceeding ``truncation_tol`` raises
    ``CutoffError`` (rerun with a larger cutoff).
    """
    if cutoff < 8:
        raise InputError("cutoff must be at least 8")
    g_samples = np.asarray(g_samples, dtype=float)
    g_t = np.asarray(g_t_tilde, dtype=float)
    if np.any(g_samples < 0):
        raise InputError("pump strength samples must be non-negative")
    grid = np.asarray(t_tilde_grid, dtype=float)

    d_s, d_i = _mode_ops(cutoff)
    ds_dag, di_dag = d_s.conj().T.tocsr(), d_i.conj().T.tocsr()
    h_up = (ds_dag @ di_dag).tocsr()
    h_dn = (d_s @ d_i).tocsr()
    n_s_op = (ds_dag @ d_s).tocsr()
    n_i_op = (di_dag @ d_i).tocsr()
    gam_s = loss_scale * (1.0 + zeta)
    gam_i = loss_scale * (1.0 - zeta)
    phase = np.exp(1j * drive_phase)

    dim = (cutoff + 1) ** 2
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0

    def g_of(t):
        return float(np.interp(t, g_t, g_samples))

    def rhs(t, rho):
        h_eff = 0.5 * g_of(t)
        comm_op = phase * (h_up @ rho) + np.conj(phase) * (h_dn @ rho)
        comm_op -= phase * (rho @ h_up) + np.conj(phase) * (rho @ h_dn)
        out = -1j * h_eff * comm_op
        out += gam_s * (d_s @ rho @ ds_dag - 0.5 * (n_s_op @ rho + rho @ n_s_op))
        out += gam_i * (d_i @ rho @ di_dag - 0.5 * (n_i_op @ rho + rho @ n_i_op))
        return out

    # indices of basis states with either mode at the cutoff level
    top = np.arange(dim).reshape(cutoff + 1, cutoff + 1)
    edge_idx = np.unique(np.concatenate([top[-1, :], top[:, -1]]))

    results = {k: [] for k in ("r", "a", "b", "theta", "ns", "ni", "m")}
    t_now = float(grid[0])
    for t_target in grid:
        while t_now < t_target - 1e-15:
            h = min(dt_max, t_target - t_now)
            k1 = rhs(t_now, rho)
            k2 = rhs(t_now + 0.5 * h, rho + 0.5 * h * k1)
            k3 = rhs(t_now + 0.5 * h, rho + 0.5 * h * k2)
            k4 = rhs(t_now + h, rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t_now += h
        edge_pop = float(np.sum(np.real(np.diag(rho)[edge_idx])))
        if edge_pop > truncation_tol:
            raise CutoffError(
                f"cutoff {cutoff} too small: population {edge_pop:.2e} at the edge "
                f"levels at t~={t_now:.3f}; rerun with a larger cutoff"
            )
        ns = float(np.real(np.trace(n_s_op @ rho)))
        ni = float(np.real(np.trace(n_i_op @ rho)))
        m = complex(np.trace(h_dn @ rho))
        r, a, b, theta = extract_gaussian_parameters(ns, ni, m)
        for k, v in zip(("r", "a", "b", "theta", "ns", "ni", "m"), (r, a, b, theta, ns, ni, m)):
            results[k].append(v)

    return FockTrajectory(
        t_tilde=grid,
        r=np.array(results["r"]),
        n_th_S=np.array(results["a"]),
        n_th_I=np.array(results["b"]),
        theta=np.array(results["theta"]),
        n_S=np.array(results["ns"]),
        n_I=np.array(results["ni"]),
        m_SI=np.array(results["m"]),
        final_state=FockState2M(cutoff=cutoff, rho=rho),
    )


def dense_ode_propagator(m: TightBindingMatrices, x0: np.ndarray, t, rtol: float = 1e-11, atol: float = 1e-13):
    """Integrate the coupled-mode equation ``dy/dt = -i G y`` numerically.

    The generator ``G = V diag(omega) W`` reproduces the mode-space dynamics,
    but the time evolution here comes from adaptive high-order stepping rather
    than the diagonal phase matrix, making this an independent check of the
    analytic propagators.  Returns y at ``t`` (scalar -> shape (N,), array ->
    shape (N, T)).
    """
    basis = solve_modes(m)
    gen = basis.V @ (basis.freqs[:, np.newaxis] * basis.W)
    x0 = np.asarray(x0, dtype=complex)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if t_arr.size == 0:
        raise InputError("empty time array")

    def rhs(_t, y):
        return -1j * (gen @ y)

    sol = solve_ivp(
        rhs,
        t_span=(0.0, float(t_arr[-1])) if t_arr[-1] > 0 else (0.0, 0.0),
        y0=x0,
        t_eval=t_arr,
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise StiffnessError(f"dense ODE oracle failed: {sol.message}")
    y = sol.y
    if np.isscalar(t) or np.ndim(t) == 0:
        return y[:, 0]
    return y
