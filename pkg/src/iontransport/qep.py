"""Quadratic eigenvalue problem for the damped crystal and its resolvent.

The Laplace-domain propagator of the damped crystal is

    G(s) = (m s^2 + V + 2 s gamma0 P_T)^{-1} = sum_a s_a/(s - s_a) r_a r_a^T

where (s_a, r_a) are the 2K eigenpairs of the quadratic pencil. Eigenvectors
are scaled so that r^T (2 m s_a + 2 gamma0 P_T) r = 1/s_a (plain transpose,
not the conjugate transpose), which makes the residue sum exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateSpectrumError, NearPoleError, NumericError
from .network import BathConfig, CouplingMatrix

CLUSTER_TOL = 1e-9
# bath weight |P_T r|^2/|r|^2 below which a mode counts as decoupled
DECOUPLED_TOL = 1e-24


@dataclass(frozen=True)
class ModeSet:
    eigenvalues: np.ndarray  # (2K,) complex s_a
    eigenvectors: np.ndarray  # (K, 2K) complex, column a is r_a
    pairing: np.ndarray  # (2K,) index of the conjugate partner
    gamma0: float
    mass: float = 1.0

    @property
    def frequencies(self) -> np.ndarray:
        """Complex normal frequencies omega_a = -i s_a."""
        return -1j * self.eigenvalues

    @property
    def damping_rates(self) -> np.ndarray:
        return -self.eigenvalues.real

    @property
    def dim(self) -> int:
        return self.eigenvectors.shape[0]


def pencil(v: np.ndarray, p_total: np.ndarray, gamma0: float, s, mass: float = 1.0):
    """G^{-1}(s) = m s^2 + V + 2 s gamma0 P_T."""
    k = v.shape[0]
    return mass * s * s * np.eye(k) + v + 2.0 * s * gamma0 * p_total


def _refine_eigenvalue(s: complex, u: np.ndarray, v: np.ndarray, pdiag: np.ndarray,
                       gamma0: float, mass: float) -> complex:
    """Re-derive s from its eigenvector through u^H G^{-1}(s) u = 0.

    For real symmetric V, P this gives Re s = -gamma0 <P>/m exactly, which keeps
    tiny damping rates accurate where the raw eigenvalue only has absolute
    accuracy of order eps * ||companion||.
    """
    nrm = np.vdot(u, u).real
    p = float(np.sum(pdiag * np.abs(u) ** 2) / nrm)
    vv = float(np.vdot(u, v @ u).real / nrm)
    disc = mass * vv - (gamma0 * p) ** 2
    if s.imag == 0.0 or disc <= 0.0:
        return s
    refined = complex(-gamma0 * p, np.copysign(np.sqrt(disc), s.imag)) / mass
    if abs(refined - s) > 1e-6 * max(abs(s), 1e-300):
        return s
    return refined


def _clusters(values: np.ndarray, tol: float):
    """Group indices of nearly equal complex numbers (sorted sweep on imag part)."""
    order = np.lexsort((values.real, values.imag))
    groups, current = [], [order[0]]
    for idx in order[1:]:
        if abs(values[idx] - values[current[-1]]) <= tol:
            current.append(idx)
        else:
            groups.append(current)
            current = [idx]
    groups.append(current)
    return groups


def _normalize_cluster(u: np.ndarray, s: complex, pdiag: np.ndarray, gamma0: float,
                       mass: float) -> np.ndarray:
    """Scale (and, for repeated eigenvalues, recombine) eigenvectors so that
    R^T Q'(s) R = I/s with Q'(s) = 2 m s + 2 gamma0 P_T."""
    qu = 2.0 * mass * s * u + 2.0 * gamma0 * pdiag[:, None] * u
    gram = u.T @ qu
    if gram.shape == (1, 1):
        g = gram[0, 0]
        if abs(g) <= 1e-13 * np.linalg.norm(u) * np.linalg.norm(qu):
            raise DegenerateSpectrumError(f"eigenvalue {s} is defective")
        w = 1.0 / np.sqrt(g)
        return u * (w / np.sqrt(s))
    if np.linalg.cond(gram) > 1e10:
        raise DegenerateSpectrumError(
            f"repeated eigenvalue {s} (multiplicity {gram.shape[0]}) is defective")
    root = scipy.linalg.sqrtm(gram)
    w = np.linalg.inv(root)
    w = 0.5 * (w + w.T)
    return (u @ w) / np.sqrt(s)


def solve_qep(cm: CouplingMatrix | np.ndarray, bath: BathConfig | None = None, *,
              gamma0: float | None = None, p_total: np.ndarray | None = None,
              mass: float = 1.0, jitter: float = 0.0, jitter_seed: int = 0,
              cluster_tol: float = CLUSTER_TOL) -> ModeSet:
    """All 2K eigenpairs via the first companion linearization.

    Eigenvalues closer than ``cluster_tol`` (relative to the spectral radius)
    are treated as one repeated eigenvalue and their eigenvectors are
    recombined so the residue expansion stays exact. ``jitter`` perturbs the
    diagonal of V by seeded noise of that size before solving.
    """
    v = np.asarray(cm.v if isinstance(cm, CouplingMatrix) else cm, dtype=float)
    k = v.shape[0]
    if bath is not None:
        gamma0 = bath.gamma0 if gamma0 is None else gamma0
        p_total = bath.p_total if p_total is None else p_total
    gamma0 = 0.0 if gamma0 is None else float(gamma0)
    pdiag = np.zeros(k) if p_total is None else np.diag(np.asarray(p_total, dtype=float)).copy()
    if p_total is not None and not np.allclose(np.asarray(p_total), np.diag(pdiag)):
        raise ValueError("p_total must be a diagonal projector")
    if jitter:
        rng = np.random.default_rng(jitter_seed)
        v = v + np.diag(jitter * rng.standard_normal(k))

    companion = np.zeros((2 * k, 2 * k))
    companion[:k, k:] = np.eye(k)
    companion[k:, :k] = -v / mass
    companion[k:, k:] = -np.diag(2.0 * gamma0 * pdiag) / mass
    try:
        s_raw, z = scipy.linalg.eig(companion, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(s_raw)):
        raise NumericError("eigensolver returned non-finite eigenvalues")
    u_all = z[:k, :].copy()
    weight = (pdiag[:, None] * np.abs(u_all) ** 2).sum(0) / (np.abs(u_all) ** 2).sum(0)
    decoupled = (weight <= DECOUPLED_TOL) & (weight > 0)
    # rounding-level bath overlap would otherwise give 0/0 damping ratios
    u_all[:, decoupled] *= (pdiag == 0)[:, None]
    s_ref = np.array([_refine_eigenvalue(s_raw[a], u_all[:, a], v, pdiag, gamma0, mass)
                      for a in range(2 * k)])

    scale = max(np.abs(s_ref).max(), 1e-300)
    upper = np.flatnonzero(s_raw.imag > 0)
    real = np.flatnonzero(s_raw.imag == 0)
    if 2 * upper.size + real.size != 2 * k:
        raise NumericError("eigenvalues of the real companion matrix are not conjugate-closed")

    vals, vecs, partner_of_upper = [], [], []
    if upper.size:
        for group in _clusters(s_ref[upper], cluster_tol * scale):
            idx = upper[group]
            s_c = complex(np.mean(s_ref[idx]))
            r = _normalize_cluster(u_all[:, idx], s_c, pdiag, gamma0, mass)
            for col in range(r.shape[1]):
                vals.append(s_c)
                vecs.append(r[:, col])
    n_up = len(vals)
    real_vals, real_vecs = [], []
    if real.size:
        for group in _clusters(s_ref[real], cluster_tol * scale):
            idx = real[group]
            s_c = complex(np.mean(s_ref[idx].real))
            if s_c == 0:
                raise DegenerateSpectrumError("zero eigenvalue: V is singular")
            r = _normalize_cluster(u_all[:, idx].real.astype(complex), s_c, pdiag,
                                   gamma0, mass)
            for col in range(r.shape[1]):
                real_vals.append(s_c)
                real_vecs.append(r[:, col])

    eigenvalues = np.array(vals + [np.conj(x) for x in vals] + real_vals, dtype=complex)
    cols = vecs + [np.conj(x) for x in vecs] + real_vecs
    eigenvectors = np.array(cols, dtype=complex).T.reshape(k, -1)
    pairing = np.concatenate([np.arange(n_up) + n_up, np.arange(n_up),
                              2 * n_up + np.arange(len(real_vals))]).astype(int)
    return ModeSet(eigenvalues, eigenvectors, pairing, gamma0, mass)


def green_eval(modes: ModeSet, s: complex) -> np.ndarray:
    """Residue sum for G(s)."""
    s = complex(s)
    dist = np.abs(s - modes.eigenvalues)
    if dist.min() <= 1e-12 * max(1.0, abs(s)):
        raise NearPoleError(f"s = {s} lies within 1e-12 of a pole")
    w = modes.eigenvalues / (s - modes.eigenvalues)
    r = modes.eigenvectors
    return (r * w) @ r.T


def moment_sums(modes: ModeSet):
    """(sum s r r^T, sum s^2 r r^T); these equal 0 and I/m for a complete set."""
    r, s = modes.eigenvectors, modes.eigenvalues
    return (r * s) @ r.T, (r * s ** 2) @ r.T
