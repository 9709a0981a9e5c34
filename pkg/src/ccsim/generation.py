"""Two-mode squeezed thermal state generation in the resonant structure.

Under an undepleted classical pump, spontaneous four-wave mixing in the
three-mode resonant structure drives the signal/idler pair into a two-mode
squeezed thermal state.  Its parameters (squeezing amplitude r, squeezing
phase theta, thermal populations n_S^th and n_I^th) obey, in dimensionless
time t~ = Gamma_+ t,

    dr/dt~   = g/2 - [sinh(r) cosh(r) / (n_S + n_I + 1)] (1 + zeta (n_I - n_S))
    dn_S/dt~ = n_S [(1-zeta) sinh^2 r - (1+zeta) cosh^2 r] + (1-zeta) sinh^2 r
    dn_I/dt~ = n_I [(1+zeta) sinh^2 r - (1-zeta) cosh^2 r] + (1+zeta) sinh^2 r

with zeta = (Gamma_S - Gamma_I) / (Gamma_S + Gamma_I), starting from vacuum.
These follow from the second-moment dynamics of the two-mode master equation;
the truncated-Fock Lindblad integrator in :mod:`ccsim.oracle` provides the
independent check.

The correlation variance between the signal and idler modes has extrema

    cv_min = (n_S^th + n_I^th + 1) e^{-2r},   cv_max = (n_S^th + n_I^th + 1) e^{+2r},

and cv_min < 1 witnesses inseparability.  The generated state is handed to the
free-propagation stage at the time t~0 where cv_min attains its minimum.
"""

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import AccuracyWarning, ContractError, InputError, WindowTooShortError
from .units import HBAR
from scipy.constants import epsilon_0 as EPS0


@dataclass(frozen=True)
class GenerationState:
    """Squeezed-thermal-state parameters at one dimensionless time."""

    t_tilde: float
    r: float
    theta: float
    n_th_S: float
    n_th_I: float

    def __post_init__(self):
        if self.r < -1e-12 or self.n_th_S < -1e-12 or self.n_th_I < -1e-12:
            raise InputError("r and thermal populations must be non-negative")


@dataclass(frozen=True)
class LossRates:
    """Loaded power decay rates of the RS modes, 2*pi*c/a units."""

    Gamma_S: float
    Gamma_I: float
    Gamma_P: float = 0.0

    def __post_init__(self):
        if self.Gamma_S <= 0 or self.Gamma_I <= 0:
            raise InputError("loaded decay rates must be positive")

    @property
    def Gamma_plus(self) -> float:
        return 0.5 * (self.Gamma_S + self.Gamma_I)

    @property
    def zeta(self) -> float:
        z = (self.Gamma_S - self.Gamma_I) / (self.Gamma_S + self.Gamma_I)
        return z


@dataclass(frozen=True)
class ChiEff:
    """Effective nonlinear parameter, dimensions of a rate (1/s)."""

    value: complex


@dataclass
class GenerationTrajectory:
    """Sampled (r, n_th_S, n_th_I) over a dimensionless time grid."""

    t_tilde: np.ndarray
    r: np.ndarray
    n_th_S: np.ndarray
    n_th_I: np.ndarray

    def state(self, index: int, theta: float = 0.0) -> GenerationState:
        return GenerationState(
            t_tilde=float(self.t_tilde[index]),
            r=float(max(self.r[index], 0.0)),
            theta=theta,
            n_th_S=float(max(self.n_th_S[index], 0.0)),
            n_th_I=float(max(self.n_th_I[index], 0.0)),
        )


def compute_chi_eff(
    field_P: np.ndarray,
    field_S: np.ndarray,
    field_I: np.ndarray,
    chi3: np.ndarray,
    eps_rs: np.ndarray,
    freqs_rad_per_s: Sequence[float],
    dV: float,
    substrate_mask: Optional[np.ndarray] = None,
) -> ChiEff:
    """Riemann-sum evaluation of the effective nonlinear rate.

    chi_eff = -(9 hbar / 16 eps0) sqrt(omega_P^2 omega_S omega_I)
              * sum_ijkl  integral  chi3_ijkl eps_RS C_Pi C_Pj conj(C_Sk) conj(C_Il) dV

    Fields are vector-valued on a regular grid with the Cartesian component as
    the leading axis (shape ``(3, ...)``); ``chi3`` is the constant bulk tensor
    (shape ``(3, 3, 3, 3)``), taken nonzero only on the substrate (by default
    where the relative permittivity exceeds 1).
    """
    field_P, field_S, field_I = (np.asarray(f) for f in (field_P, field_S, field_I))
    for name, f in (("P", field_P), ("S", field_S), ("I", field_I)):
        if f.shape[0] != 3 or f.shape != field_P.shape:
            raise InputError(f"field {name}: expected shape (3, ...) congruent across modes")
    eps_rs = np.asarray(eps_rs)
    if eps_rs.shape != field_P.shape[1:]:
        raise InputError("eps_rs grid does not match the field grids")
    chi3 = np.asarray(chi3)
    if chi3.shape != (3, 3, 3, 3):
        raise InputError("chi3 must have shape (3, 3, 3, 3)")
    if substrate_mask is None:
        substrate_mask = eps_rs > 1.0 + 1e-12
    omega_p, omega_s, omega_i = freqs_rad_per_s

    contraction = np.einsum(
        "ijkl,i...,j...,k...,l...->...",
        chi3,
        field_P,
        field_P,
        field_S.conj(),
        field_I.conj(),
    )
    integral = np.sum(contraction * eps_rs * substrate_mask) * dV
    prefactor = -(9.0 * HBAR / (16.0 * EPS0)) * np.sqrt(omega_p**2 * omega_s * omega_i)
    return ChiEff(value=complex(prefactor * integral))


def silicon_chi3_xxxx(n_linear: float = 3.47, n2_m2_per_W: float = 4.5e-18) -> float:
    """Kerr chi3_xxxx of the substrate from its nonlinear index,
    ``chi3 = 4 n2 n^2 eps0 c / 3``."""
    from scipy.constants import c as c_light

    return 4.0 * n2_m2_per_W * n_linear**2 * EPS0 * c_light / 3.0


def _rhs(r: float, a: float, b: float, g: float, zeta: float):
    sh, ch = np.sinh(r), np.cosh(r)
    total = a + b + 1.0
    dr = 0.5 * g - (sh * ch / total) * (1.0 + zeta * (b - a))
    da = a * ((1 - zeta) * sh * sh - (1 + zeta) * ch * ch) + (1 - zeta) * sh * sh
    db = b * ((1 + zeta) * sh * sh - (1 - zeta) * ch * ch) + (1 + zeta) * sh * sh
    return dr, da, db


def _rk4_step(state, t, h, g_interp, zeta):
    r, a, b = state
    g0 = g_interp(t)
    gh = g_interp(t + 0.5 * h)
    g1 = g_interp(t + h)
    k1 = _rhs(r, a, b, g0, zeta)
    k2 = _rhs(r + 0.5 * h * k1[0], a + 0.5 * h * k1[1], b + 0.5 * h * k1[2], gh, zeta)
    k3 = _rhs(r + 0.5 * h * k2[0], a + 0.5 * h * k2[1], b + 0.5 * h * k2[2], gh, zeta)
    k4 = _rhs(r + h * k3[0], a + h * k3[1], b + h * k3[2], g1, zeta)
    return (
        r + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        a + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        b + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
    )


def integrate_generation(
    g_samples: np.ndarray,
    g_t_tilde: np.ndarray,
    zeta: float,
    t_tilde_grid: np.ndarray,
    check_accuracy: bool = True,
) -> GenerationTrajectory:
    """Fixed-step RK4 trajectory of (r, n_th_S, n_th_I) from vacuum.

    ``g_samples`` is the sampled pump strength on ``g_t_tilde`` (linearly
    interpolated between samples) and must cover ``t_tilde_grid``.  When
    ``check_accuracy`` is set, the integration is repeated with halved steps
    and an ``AccuracyWarning`` is emitted if the endpoint moves by more than
    1e-6.
    """
    g_samples = np.asarray(g_samples, dtype=float)
    g_t = np.asarray(g_t_tilde, dtype=float)
    grid = np.asarray(t_tilde_grid, dtype=float)
    if np.any(g_samples < 0):
        raise InputError("pump strength samples must be non-negative")
    if grid[0] < g_t[0] - 1e-12 or grid[-1] > g_t[-1] + 1e-12:
        raise InputError("t_tilde_grid extends beyond the sampled pump strength")
    if np.any(np.diff(grid) <= 0):
        raise InputError("t_tilde_grid must be strictly increasing")

    def g_interp(t):
        return float(np.interp(t, g_t, g_samples))

    def run(subdivide: int):
        r = np.empty_like(grid)
        a = np.empty_like(grid)
        b = np.empty_like(grid)
        r[0] = a[0] = b[0] = 0.0
        state = (0.0, 0.0, 0.0)
        for i in range(len(grid) - 1):
            h = (grid[i + 1] - grid[i]) / subdivide
            t = grid[i]
            for _ in range(subdivide):
                state = _rk4_step(state, t, h, g_interp, zeta)
                t += h
            r[i + 1], a[i + 1], b[i + 1] = state
        return r, a, b

    r, a, b = run(1)
    if check_accuracy:
        r2, a2, b2 = run(2)
        drift = max(abs(r2[-1] - r[-1]), abs(a2[-1] - a[-1]), abs(b2[-1] - b[-1]))
        if drift > 1e-6:
            warnings.warn(
                f"generation RK4 step too large: halving moves endpoint by {drift:.2e}",
                AccuracyWarning,
                stacklevel=2,
            )
        r, a, b = r2, a2, b2
    return GenerationTrajectory(t_tilde=grid, r=r, n_th_S=a, n_th_I=b)


def squeezing_phase(
    t_tilde,
    omega_p: float,
    gamma_plus: float,
    beta: float,
    t_tilde_ref: float = 0.0,
    beta_is_constant: bool = True,
):
    """Squeezing phase ``theta = -2 omega_P (t - t_ref) - pi/2 + beta``.

    Time enters physically, so the dimensionless argument is rescaled by
    Gamma_+ (both frequencies in 2*pi*c/a units).  Valid only while the drive
    phase beta is constant; callers must pass the pump module's constancy flag.
    """
    if not beta_is_constant:
        raise ContractError("drive phase beta is not constant; squeezing phase undefined")
    return -2.0 * (omega_p / gamma_plus) * (np.asarray(t_tilde) - t_tilde_ref) - np.pi / 2.0 + beta


def rs_cv_extrema(state: GenerationState):
    """Extremal correlation variances of the two-mode squeezed thermal state."""
    total = state.n_th_S + state.n_th_I + 1.0
    return total * np.exp(-2.0 * state.r), total * np.exp(2.0 * state.r)


def cv_extrema_arrays(r: np.ndarray, n_th_S: np.ndarray, n_th_I: np.ndarray):
    """Vectorized form of :func:`rs_cv_extrema` for trajectories."""
    total = np.asarray(n_th_S) + np.asarray(n_th_I) + 1.0
    return total * np.exp(-2.0 * np.asarray(r)), total * np.exp(2.0 * np.asarray(r))


@dataclass(frozen=True)
class HandoffResult:
    t_tilde0: float
    state: GenerationState
    n_S: float              # total signal photons at t~0
    n_I: float              # total idler photons at t~0
    index: int


def total_photon_numbers(state: GenerationState):
    """Total photon numbers of the squeezed thermal state,
    ``n_j = n_j^th cosh^2 r + (1 + n_k^th) sinh^2 r``."""
    ch2 = np.cosh(state.r) ** 2
    sh2 = np.sinh(state.r) ** 2
    n_s = state.n_th_S * ch2 + (1.0 + state.n_th_I) * sh2
    n_i = state.n_th_I * ch2 + (1.0 + state.n_th_S) * sh2
    return n_s, n_i


def select_handoff(trajectory: GenerationTrajectory, theta: Optional[np.ndarray] = None) -> HandoffResult:
    """Pick the handoff time t~0 at the global minimum of cv_min.

    Raises ``WindowTooShortError`` if cv_min is still decreasing at the end of
    the grid, or if no point dips below the vacuum level 1 (nothing was
    generated).  Ties resolve to the first occurrence.
    """
    cv_min, _ = cv_extrema_arrays(trajectory.r, trajectory.n_th_S, trajectory.n_th_I)
    idx = int(np.argmin(cv_min))
    if cv_min[idx] >= 1.0:
        raise WindowTooShortError("correlation variance never drops below 1 (vacuum trajectory?)")
    if idx == len(cv_min) - 1:
        raise WindowTooShortError("cv_min still decreasing at the end of the time grid")
    th = float(theta[idx]) if theta is not None else 0.0
    state = trajectory.state(idx, theta=th)
    n_s, n_i = total_photon_numbers(state)
    return HandoffResult(
        t_tilde0=float(trajectory.t_tilde[idx]),
        state=state,
        n_S=float(n_s),
        n_I=float(n_i),
        index=idx,
    )
