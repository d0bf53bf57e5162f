"""Closed-form steady state of the crystal between two Ohmic baths.

High-temperature residue sums over the quadratic-pencil eigenpairs give the
covariance blocks sigma^(j,k) and the heat current. Frequencies are
omega_a = -i s_a; the thermal bias enters through Delta = -2 i k_B (T_L - T_R)
and A = 2 k_B (T_L P_L + T_R P_R).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crystal import EquilibriumConfiguration
from .errors import (DegeneratePairError, NumericConsistencyError,
                     UndefinedConductivityError, UnphysicalDispersionError)
from .network import BathConfig, CouplingMatrix
from .qep import ModeSet, solve_qep

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class SteadyStateReport:
    sigma_xx: np.ndarray
    sigma_xp: np.ndarray
    sigma_pp: np.ndarray
    q_dot: float
    q_dot_modes: np.ndarray  # (2K, 2): Re omega_a, Qdot_a
    kappa: float | None
    crystal_length: float
    q_dot_right: float  # from the momentum block, see bath_power


@dataclass(frozen=True)
class TemperatureProfile:
    coordinate_temperatures: np.ndarray  # (K,)
    temperatures: np.ndarray  # (N,) per ion, mean of x and y
    central_gradient: float | None = None
    fit_window: tuple | None = None


def _pair_weights(num: np.ndarray, den: np.ndarray, overlap: np.ndarray) -> np.ndarray:
    """num/den, set to zero where den vanishes exactly.

    That only happens for undamped modes, whose bath ``overlap`` must vanish
    too; otherwise the pair is genuinely degenerate.
    """
    zero = den == 0
    if np.any(zero):
        scale = np.abs(overlap).max()
        if scale > 0 and np.abs(overlap[zero]).max() > 1e-12 * scale:
            raise DegeneratePairError("omega_a + omega_b = 0 for a pair with bath overlap")
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=~zero)
    return out


def _real(z: np.ndarray | complex, what: str):
    re, im = np.real(z), np.imag(z)
    scale = np.max(np.abs(re)) if np.size(re) else 0.0
    worst = np.max(np.abs(im)) if np.size(im) else 0.0
    if worst > IMAG_TOL * max(scale, 1e-300) and worst > 1e-300:
        raise NumericConsistencyError(
            f"{what}: imaginary residue {worst:.3e} vs real scale {scale:.3e}")
    return re


def covariance(modes: ModeSet, bath: BathConfig):
    """(sigma_xx, sigma_xp, sigma_pp) from the double residue sum."""
    r, w, m, g = modes.eigenvectors, modes.frequencies, modes.mass, modes.gamma0
    a = np.diag(bath.noise_matrix)
    overlap = r.T @ (a[:, None] * r)
    base = _pair_weights(w[None, :] * overlap, w[:, None] + w[None, :], overlap)
    out = []
    for j, k in ((0, 0), (0, 1), (1, 1)):
        coef = (w ** (j + k + 1))[:, None] * base
        total = (r @ coef @ r.T) * (m ** (j + k) / (1j) ** (k - j + 1))
        sigma = 2.0 * g * total
        # the (0,1) block keeps only the real part by definition
        if (j, k) == (0, 1):
            sigma = sigma.real
        else:
            sigma = _real(sigma, f"sigma^({j},{k})")
        out.append(sigma)
    sxx, sxp, spp = out
    return 0.5 * (sxx + sxx.T), sxp, 0.5 * (spp + spp.T)


def _current_terms(modes: ModeSet, p_first: np.ndarray, p_second: np.ndarray,
                   t_left: float, t_right: float) -> np.ndarray:
    r, w, g = modes.eigenvectors, modes.frequencies, modes.gamma0
    m1 = r.T @ (p_first[:, None] * r)
    m2 = r.T @ (p_second[:, None] * r)
    delta = -2j * (t_left - t_right)
    overlap = m1 * m2.T
    kernel = _pair_weights((w ** 3)[:, None] * w[None, :], w[:, None] + w[None, :], overlap)
    return 4.0 * g * g * delta * kernel * overlap


def heat_current(modes: ModeSet, bath: BathConfig) -> float:
    """Heat current from the left bath into the crystal (positive for T_L > T_R)."""
    terms = _current_terms(modes, np.diag(bath.p_left), np.diag(bath.p_right),
                           bath.t_left, bath.t_right)
    total = terms.sum()
    return float(_real(total, "heat current")) if abs(total) > 0 else 0.0


def mode_currents(modes: ModeSet, bath: BathConfig, *, literal: str | None = None):
    """Per-mode contributions Qdot_a, as an array of (Re omega_a, Qdot_a).

    Row a is the a-th outer term of the heat-current double sum, so the
    contributions add up to ``heat_current``. Conjugate partners carry complex
    conjugate terms; the real part is reported for each. ``literal='L'`` or
    ``'R'`` uses the same projector in both overlaps instead (comparison only;
    those terms do not sum to the current).
    """
    pl, pr = np.diag(bath.p_left), np.diag(bath.p_right)
    if literal == "L":
        pr = pl
    elif literal == "R":
        pl = pr
    elif literal is not None:
        raise ValueError("literal must be None, 'L' or 'R'")
    per_mode = _current_terms(modes, pl, pr, bath.t_left, bath.t_right).sum(axis=1)
    pair_sum = per_mode + per_mode[modes.pairing]
    _real(pair_sum, "per-mode current")
    return np.column_stack([modes.frequencies.real, per_mode.real])


def current_from_covariance(sigma_xp: np.ndarray, v: np.ndarray, projector: np.ndarray,
                            mass: float = 1.0) -> float:
    """Tr(P V sigma_xp)/m: power delivered by the bath on the projected coordinates."""
    return float(np.trace(projector @ v @ sigma_xp) / mass)


def bath_power(sigma_pp: np.ndarray, bath: BathConfig, side: str, mass: float = 1.0,
               k_b: float = 1.0) -> float:
    """Power delivered by bath ``side`` ('L' or 'R'), from the momentum block.

    At the steady state this equals Tr(P V sigma_xp)/m identically (pp block of
    the Lyapunov equation), but it has no O(1) cancellation: the sigma_xp form
    loses accuracy like eps/gamma0 at weak coupling.
    """
    proj = {"L": bath.p_left, "R": bath.p_right}[side]
    temp = {"L": bath.t_left, "R": bath.t_right}[side]
    pp = np.diag(np.asarray(sigma_pp))
    pdiag = np.diag(proj)
    return float(2.0 * bath.gamma0 / mass * (k_b * temp * pdiag.sum() - pdiag @ pp / mass))


def local_temperatures(sigma_pp: np.ndarray, v=None, mode: str = "high_t", *,
                       mass: float = 1.0, hbar: float = 1.0, k_b: float = 1.0) -> TemperatureProfile:
    """Kinetic temperature of each coordinate and of each ion's transverse motion.

    ``high_t``: T_i = <p_i^2>/(m k_B). ``coth``: inverts
    coth(hbar w_i / (2 k_B T_i)) = 2 <p_i^2>/(m hbar w_i) with w_i = sqrt(V_ii/m).
    """
    pp = np.diag(np.asarray(sigma_pp)).astype(float)
    if mode == "high_t":
        temps = pp / (mass * k_b)
    elif mode == "coth":
        if v is None:
            raise ValueError("coth temperatures need the coupling matrix")
        vd = np.diag(v.v if isinstance(v, CouplingMatrix) else np.asarray(v)).astype(float)
        if np.any(vd <= 0):
            raise ValueError("coth temperatures need positive V_ii")
        omega = np.sqrt(vd / mass)
        y = 2.0 * pp / (mass * hbar * omega)
        if np.any(y <= 1.0):
            bad = int(np.argmax(y <= 1.0))
            raise UnphysicalDispersionError(
                f"coordinate {bad}: momentum dispersion below the zero-point value")
        # arccoth(y) = 0.5 log((y + 1)/(y - 1)) = 0.5 log1p(2/(y - 1))
        x = 0.5 * np.log1p(2.0 / (y - 1.0))
        temps = hbar * omega / (2.0 * k_b * x)
    else:
        raise ValueError(f"unknown temperature mode {mode!r}")
    n = temps.size // 3
    ion = 0.5 * (temps[0::3] + temps[1::3])[:n]
    return TemperatureProfile(temps, ion)


def conductivity(q_dot: float, t_left: float, t_right: float,
                 config: EquilibriumConfiguration | float):
    """kappa = |Qdot| L / |dT|, with L the axial extent of the crystal."""
    dt = t_right - t_left
    if dt == 0:
        raise UndefinedConductivityError("conductivity is undefined for T_L = T_R")
    length = config if isinstance(config, (int, float)) else config.length
    return abs(q_dot) * length / abs(dt), float(length)


def central_gradient(temperatures, positions, t_left: float, t_right: float,
                     *, return_window: bool = False):
    """Slope of T vs z over the central half of the ions, in units of dT/L."""
    temps = np.asarray(temperatures, dtype=float)
    pos = np.asarray(positions, dtype=float)
    z = pos[:, 2] if pos.ndim == 2 else pos
    order = np.argsort(z, kind="stable")
    z, temps = z[order], temps[order]
    n = z.size
    if n < 8:
        raise ValueError("central gradient needs at least 8 ions")
    lo, hi = n // 4, n - n // 4
    slope = np.polyfit(z[lo:hi], temps[lo:hi], 1)[0]
    length = z[-1] - z[0]
    dt = t_right - t_left
    value = float(slope / (dt / length))
    return (value, (lo, hi)) if return_window else value


def steady_state(cm: CouplingMatrix, bath: BathConfig,
                 config: EquilibriumConfiguration | None = None,
                 modes: ModeSet | None = None) -> SteadyStateReport:
    """Covariances, current, mode currents and conductivity for one system."""
    modes = modes or solve_qep(cm, bath)
    sxx, sxp, spp = covariance(modes, bath)
    q = heat_current(modes, bath)
    qm = mode_currents(modes, bath)
    q_right = bath_power(spp, bath, "R", modes.mass)
    kappa, length = None, float("nan")
    if config is not None:
        length = config.length
        if bath.t_left != bath.t_right:
            kappa, length = conductivity(q, bath.t_left, bath.t_right, config)
    return SteadyStateReport(sxx, sxp, spp, q, qm, kappa, length, q_right)
