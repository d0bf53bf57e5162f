"""Brute-force frequency quadrature of the steady-state integrals.

This path never touches the quadratic eigenproblem: it inverts
-m w^2 + V + 2 i w gamma0 P_T at every quadrature node. Panels are graded
geometrically around the undamped normal frequencies (from eigvalsh of V),
because the integrands are sums of Lorentzians of width ~gamma0. The range
above ``max_frequency`` is mapped onto (0, 1] with w = W/t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError, SingularMatrixError
from .network import BathConfig, CouplingMatrix


@dataclass(frozen=True)
class QuadratureSpec:
    max_frequency: float | None = None
    points: int = 16  # Gauss-Legendre nodes per panel
    scheme: str = "graded-gauss-legendre"
    rel_tol: float = 1e-9
    max_refinements: int = 6
    grading_levels: int = 20
    min_width: float = 1e-4  # finest panel, in units of gamma0


def _v(v) -> np.ndarray:
    return np.asarray(v.v if isinstance(v, CouplingMatrix) else v, dtype=float)


def default_max_frequency(v, alpha: float | None = None) -> float:
    """3 x max(alpha, Gershgorin bound on sqrt(eig V))."""
    v = _v(v)
    gersh = np.max(np.diag(v) + np.sum(np.abs(v), axis=1) - np.abs(np.diag(v)))
    est = np.sqrt(max(gersh, 0.0))
    return 3.0 * max(est, alpha or 0.0)


def quad_green(v, bath: BathConfig, omega: float, mass: float = 1.0) -> np.ndarray:
    """G(i w) = (-m w^2 + V + 2 i w gamma0 P_T)^{-1} by direct inversion."""
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    return _green_stack(_v(v), np.diag(bath.p_total), bath.gamma0, np.array([omega]), mass)[0]


def _green_stack(v: np.ndarray, pdiag: np.ndarray, gamma0: float, omegas: np.ndarray,
                 mass: float = 1.0) -> np.ndarray:
    k = v.shape[0]
    mats = np.broadcast_to(v, (omegas.size, k, k)).astype(complex)
    idx = np.arange(k)
    mats[:, idx, idx] += (-mass * omegas[:, None] ** 2
                          + 2j * omegas[:, None] * gamma0 * pdiag[None, :])
    cond = np.linalg.cond(mats)
    bad = np.flatnonzero(~(cond < 1e14))
    if bad.size:
        w = float(omegas[bad[0]])
        raise SingularMatrixError(f"G^-1(i w) is singular at w = {w:.12g}", omega=w)
    return np.linalg.inv(mats)


def _panels(v: np.ndarray, gamma0: float, wmax: float, levels: int,
            min_width: float) -> np.ndarray:
    """Breakpoints on [0, wmax], refined geometrically around each resonance."""
    freqs = np.sqrt(np.clip(np.linalg.eigvalsh(v), 0.0, None))
    width = max(gamma0 * min_width, 1e-14)
    pts = [0.0, wmax]
    for f in freqs:
        if f >= wmax:
            continue
        pts.append(f)
        for lev in range(levels):
            off = width * 4.0 ** lev
            if off > wmax:
                break
            pts.extend([f - off, f + off])
    pts = np.unique(np.clip(np.asarray(pts), 0.0, wmax))
    return pts


def _integrate(fn, breaks: np.ndarray, wmax: float, points: int):
    """Sum of Gauss-Legendre panel rules plus the mapped tail [wmax, inf)."""
    x, wts = np.polynomial.legendre.leggauss(points)
    a, b = breaks[:-1], breaks[1:]
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wts[None, :]).ravel()
    # tail: w = wmax / t, dw = wmax / t^2 dt, t in (0, 1]
    t = 0.5 * (x + 1.0)
    tail_nodes = wmax / t
    tail_weights = 0.5 * wts * wmax / t ** 2
    vals = fn(np.concatenate([nodes, tail_nodes]))
    allw = np.concatenate([weights, tail_weights])
    return np.tensordot(allw, vals, axes=(0, 0)), np.tensordot(allw, np.abs(vals), axes=(0, 0))


def _adaptive(fn, v: np.ndarray, bath: BathConfig, spec: QuadratureSpec):
    wmax = spec.max_frequency or default_max_frequency(v)
    breaks = _panels(v, bath.gamma0, wmax, spec.grading_levels, spec.min_width)
    prev, _ = _integrate(fn, breaks, wmax, spec.points)
    for _ in range(spec.max_refinements):
        mids = 0.5 * (breaks[:-1] + breaks[1:])
        breaks = np.sort(np.concatenate([breaks, mids]))
        cur, mag = _integrate(fn, breaks, wmax, spec.points)
        err = np.max(np.abs((cur - prev).real))
        # relative to the integral of |f|, so results that cancel to ~0 converge
        scale = np.max(mag)
        if err <= spec.rel_tol * max(scale, 1e-300):
            return cur, float(err)
        prev = cur
    raise QuadratureError(f"quadrature did not converge (error estimate {err:.3e})",
                          error_estimate=float(err))


def heat_integrand(v, bath: BathConfig, omegas, temperature_model: str = "high_t",
                   mass: float = 1.0, hbar: float = 1.0, k_b: float = 1.0) -> np.ndarray:
    """pi Tr(I_L G(iw) I_R G(-iw)) hbar w [coth(hbar w/2kT_L) - coth(hbar w/2kT_R)].

    With I_l = (2/pi) gamma0 P_l w. ``high_t`` replaces coth(x) by 1/x.
    """
    v = _v(v)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    g = _green_stack(v, np.diag(bath.p_total), bath.gamma0, omegas, mass)
    pl, pr = np.diag(bath.p_left).astype(bool), np.diag(bath.p_right).astype(bool)
    block = g[:, pl][:, :, pr]
    trace = np.sum(np.abs(block) ** 2, axis=(1, 2))  # Tr(P_L G P_R G^dagger)
    spectral = (2.0 / np.pi * bath.gamma0) ** 2 * omegas ** 2
    if temperature_model == "high_t":
        thermal = 2.0 * k_b * (bath.t_left - bath.t_right) * np.ones_like(omegas)
    elif temperature_model == "coth":
        thermal = hbar * omegas * (_coth(hbar * omegas / (2 * k_b * bath.t_left))
                                   - _coth(hbar * omegas / (2 * k_b * bath.t_right)))
    else:
        raise ValueError(f"unknown temperature model {temperature_model!r}")
    return np.pi * spectral * trace * thermal


def _coth(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x == 0, np.inf, 1.0 / np.tanh(x))


def quad_heat_current(v, bath: BathConfig, spec: QuadratureSpec | None = None,
                      temperature_model: str = "high_t", *, return_error: bool = False,
                      mass: float = 1.0):
    spec = spec or QuadratureSpec()
    v = _v(v)
    if bath.t_left == bath.t_right:
        return (0.0, 0.0) if return_error else 0.0
    fn = lambda w: heat_integrand(v, bath, w, temperature_model, mass)
    val, err = _adaptive(fn, v, bath, spec)
    return (float(val.real), err) if return_error else float(val.real)


def quad_covariance(v, bath: BathConfig, spec: QuadratureSpec | None = None,
                    j: int = 0, k: int = 0, *, return_error: bool = False,
                    mass: float = 1.0):
    """sigma^(j,k) = int_0^inf dw (-i)^(k-j) (m w)^(j+k) G(iw) nu(w) G(-iw), real part.

    High-temperature noise kernel nu(w) = (2/pi) gamma0 A. The phase (-i)^(k-j)
    makes the (0,1) block Re<X P^T> (rows X, columns P); the opposite phase
    yields its transpose.
    """
    if (j, k) not in ((0, 0), (0, 1), (1, 1)):
        raise ValueError("(j, k) must be one of (0,0), (0,1), (1,1)")
    spec = spec or QuadratureSpec()
    v = _v(v)
    pdiag = np.diag(bath.p_total)
    adiag = (2.0 / np.pi) * bath.gamma0 * np.diag(bath.noise_matrix)

    def fn(omegas):
        g = _green_stack(v, pdiag, bath.gamma0, omegas, mass)
        inner = np.einsum("wab,b,wcb->wac", g, adiag, np.conj(g))
        fac = (-1j) ** (k - j) * (mass * omegas) ** (j + k)
        return fac[:, None, None] * inner  # complex: |f| sets the convergence scale

    val, err = _adaptive(fn, v, bath, spec)
    return (val.real, err) if return_error else val.real
