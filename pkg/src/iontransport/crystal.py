"""Equilibrium structures of ions in a cylindrically symmetric harmonic trap.

Units: m = omega_z = 1 and q^2 = Q^2/(m omega_z^2) = 1, so the potential is

    V = 1/2 sum_i (alpha^2 (x_i^2 + y_i^2) + z_i^2) + q^2 sum_{i<j} 1/|r_i - r_j|

Ground states are searched with differential evolution (DE/rand/1/bin) and
then polished with a trust-region Newton method on the analytic Hessian.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .errors import ConvergenceError, DegenerateConfigurationError

LINEAR_RADIUS_TOL = 1e-4
UNORDERED_GAP_TOL = 1e-4
ZIGZAG_ANGLE_TOL = 0.1

LINEAR1D = "Linear1D"
ZIGZAG2D = "ZigZag2D"
HELICAL3D = "Helical3D"
UNORDERED = "Unordered"


@dataclass(frozen=True)
class CrystalParams:
    n_ions: int
    alpha: float
    q_sq: float = 1.0

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError(f"n_ions must be a positive integer, got {self.n_ions}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.q_sq > 0:
            raise ValueError(f"q_sq must be positive, got {self.q_sq}")


@dataclass(frozen=True)
class Gauge:
    """Record of the symmetry fixing applied to a configuration."""

    rotation_angle: float = 0.0
    reflected: bool = False
    snapped_to_axis: bool = False
    order: tuple = ()


@dataclass(frozen=True)
class EquilibriumConfiguration:
    params: CrystalParams
    positions: np.ndarray  # (N, 3)
    energy: float
    residual_gradient_norm: float
    gauge: Gauge = field(default_factory=Gauge)
    seed: int | None = None

    @property
    def n_ions(self) -> int:
        return self.positions.shape[0]

    @property
    def length(self) -> float:
        z = self.positions[:, 2]
        return float(z.max() - z.min())


@dataclass(frozen=True)
class StructureReport:
    radius: float
    min_z_gap: float
    mean_azimuthal_step: float
    phase: str


@dataclass(frozen=True)
class PhasePath:
    dimension: str
    c: float
    beta: float


PATHS = {
    "1D": PhasePath("1D", 0.67, 0.873),
    "2D": PhasePath("2D", 0.44, 0.861),
    "3D": PhasePath("3D", 0.28, 0.811),
}


@dataclass
class DEOptions:
    """Settings for the structure search.

    ``population`` defaults to 15 * min(3N, 40). ``n_polish`` best members of
    the final population are each refined locally; the lowest energy wins.
    """

    max_generations: int = 200
    population: int | None = None
    mutation: float = 0.7
    crossover: float = 0.9
    de_tol: float = 1e-8
    tolerance: float = 1e-10
    n_polish: int = 8
    polish_maxiter: int = 2000
    snap_linear: bool = True


# ---------------------------------------------------------------------------
# potential and derivatives
# ---------------------------------------------------------------------------

def _as_positions(positions) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 1:
        pos = pos.reshape(-1, 3)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ValueError(f"positions must have shape (N, 3), got {pos.shape}")
    return pos


def _pair_geometry(pos: np.ndarray):
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    n = pos.shape[0]
    off = ~np.eye(n, dtype=bool)
    if n > 1 and np.any(dist[off] == 0.0):
        i, j = np.argwhere((dist == 0.0) & off)[0]
        raise DegenerateConfigurationError(f"ions {i} and {j} coincide")
    np.fill_diagonal(dist, np.inf)
    return diff, dist


def _trap_diag(params: CrystalParams) -> np.ndarray:
    a2 = params.alpha ** 2
    return np.array([a2, a2, 1.0])


def potential_energy(params: CrystalParams, positions) -> float:
    pos = _as_positions(positions)
    _, dist = _pair_geometry(pos)
    trap = 0.5 * np.sum(_trap_diag(params) * pos ** 2)
    coulomb = 0.5 * params.q_sq * np.sum(1.0 / dist)
    return float(trap + coulomb)


def potential_gradient(params: CrystalParams, positions) -> np.ndarray:
    """Gradient of the potential, shape (N, 3)."""
    pos = _as_positions(positions)
    diff, dist = _pair_geometry(pos)
    coul = -params.q_sq * np.sum(diff / dist[:, :, None] ** 3, axis=1)
    return _trap_diag(params) * pos + coul


def potential_hessian(params: CrystalParams, positions) -> np.ndarray:
    """Analytic Hessian, (3N, 3N), rows ordered (x0, y0, z0, x1, ...)."""
    pos = _as_positions(positions)
    n = pos.shape[0]
    diff, dist = _pair_geometry(pos)
    inv3 = 1.0 / dist ** 3
    inv5 = 1.0 / dist ** 5
    # Hessian of 1/|r| w.r.t. r is (3 r r^T - r^2 I) / r^5
    blocks = 3.0 * diff[:, :, :, None] * diff[:, :, None, :] * inv5[:, :, None, None]
    blocks -= np.eye(3)[None, None] * inv3[:, :, None, None]
    blocks *= params.q_sq
    h = -blocks
    diag = blocks.sum(axis=1) + np.diag(_trap_diag(params))[None]
    h[np.arange(n), np.arange(n)] = diag
    h = h.transpose(0, 2, 1, 3).reshape(3 * n, 3 * n)
    return 0.5 * (h + h.T)


def _batch_energy(params: CrystalParams, flat: np.ndarray) -> np.ndarray:
    """Energies of a population given as (3N, S) columns."""
    n = params.n_ions
    flat = np.asarray(flat)
    if flat.ndim == 1:
        flat = flat[:, None]
    pos = flat.T.reshape(-1, n, 3)
    trap = 0.5 * np.einsum("snk,k->s", pos ** 2, _trap_diag(params))
    iu, ju = np.triu_indices(n, 1)
    d = pos[:, iu, :] - pos[:, ju, :]
    r = np.sqrt(np.einsum("spk,spk->sp", d, d))
    with np.errstate(divide="ignore"):
        coul = params.q_sq * np.sum(1.0 / r, axis=1)
    return trap + coul


# ---------------------------------------------------------------------------
# gauge fixing
# ---------------------------------------------------------------------------

def _pick_max_radius(radii: np.ndarray, candidates: np.ndarray) -> int:
    """Largest radius among candidates; near-ties broken by lowest index."""
    rmax = radii[candidates].max()
    tied = candidates[radii[candidates] >= rmax * (1.0 - 1e-9)]
    return int(tied.min())


def gauge_fix(positions, *, snap_tol: float | None = None):
    """Fix the O(2) symmetry about z and the labelling of ions.

    Ions are sorted by z; the largest-radius ion is rotated onto the +x
    half-plane and the crystal is reflected y -> -y if needed so that the
    next off-plane ion has azimuth in [0, pi). Returns (positions, Gauge).
    """
    pos = _as_positions(positions).copy()
    order = np.argsort(pos[:, 2], kind="stable")
    pos = pos[order]
    radii = np.hypot(pos[:, 0], pos[:, 1])
    snapped = False
    if snap_tol is not None and radii.max() < snap_tol:
        pos[:, :2] = 0.0
        snapped = True
        return pos, Gauge(0.0, False, snapped, tuple(int(i) for i in order))
    if radii.max() == 0.0:
        return pos, Gauge(0.0, False, snapped, tuple(int(i) for i in order))

    lead = _pick_max_radius(radii, np.arange(len(pos)))
    angle = float(np.arctan2(pos[lead, 1], pos[lead, 0]))
    if angle != 0.0:
        c, s = np.cos(angle), np.sin(angle)
        x, y = pos[:, 0].copy(), pos[:, 1].copy()
        pos[:, 0] = c * x + s * y
        pos[:, 1] = -s * x + c * y
    pos[lead, 0] = radii[lead]
    pos[lead, 1] = 0.0

    reflected = False
    off_plane = (radii > 1e-6 * radii[lead]) & (np.abs(pos[:, 1]) > 1e-6 * radii)
    off_plane[lead] = False
    cand = np.flatnonzero(off_plane)
    if cand.size:
        ref = _pick_max_radius(radii, cand)
        if pos[ref, 1] < 0.0:
            pos[:, 1] = -pos[:, 1]
            reflected = True
    return pos, Gauge(angle, reflected, snapped, tuple(int(i) for i in order))


# ---------------------------------------------------------------------------
# structure search
# ---------------------------------------------------------------------------

def _search_box(n: int) -> np.ndarray:
    """Half-widths per coordinate, flattened (x, y, z per ion)."""
    half = np.array([2.0, 2.0, 2.0 * n ** (2.0 / 3.0)])
    return np.tile(half, n)


def _polish(params: CrystalParams, x0: np.ndarray, opts: DEOptions):
    n = params.n_ions
    fun = lambda v: potential_energy(params, v.reshape(n, 3))
    jac = lambda v: potential_gradient(params, v.reshape(n, 3)).ravel()
    hess = lambda v: potential_hessian(params, v.reshape(n, 3))
    try:
        res = optimize.minimize(fun, x0, jac=jac, hess=hess, method="trust-exact",
                                options={"gtol": opts.tolerance * 1e-2,
                                         "maxiter": opts.polish_maxiter})
        x = res.x
    except DegenerateConfigurationError:
        return x0, np.inf
    x = _newton_finish(params, x, opts.tolerance)
    return x, fun(x)


def _newton_finish(params: CrystalParams, x: np.ndarray, tol: float, steps: int = 12):
    """Newton steps with backtracking to push the gradient below tol.

    The rigid rotation about z is a symmetry, so it is stiffened in the
    Hessian; otherwise a nearly zero eigenvalue sends the step off along it.
    """
    n = params.n_ions
    gnorm = lambda y: np.max(np.abs(potential_gradient(params, y.reshape(n, 3))))
    for _ in range(steps):
        pos = x.reshape(n, 3)
        g = potential_gradient(params, pos).ravel()
        g0 = np.max(np.abs(g))
        if g0 <= tol * 1e-2:
            break
        h = potential_hessian(params, pos)
        t = np.column_stack([-pos[:, 1], pos[:, 0], np.zeros(n)]).ravel()
        if np.linalg.norm(t) > 0:
            t /= np.linalg.norm(t)
            h = h + np.max(np.abs(np.diag(h))) * np.outer(t, t)
        step = np.linalg.lstsq(h, g, rcond=1e-14)[0]
        lam = 1.0
        while lam > 1e-3 and gnorm(x - lam * step) >= g0:
            lam *= 0.5
        if lam <= 1e-3:
            break
        x = x - lam * step
    return x


def _polish_axis(params: CrystalParams, z: np.ndarray, tol: float) -> np.ndarray:
    """Newton iteration on axial coordinates only (transverse pinned at 0)."""
    n = params.n_ions
    z = np.sort(z)
    for _ in range(100):
        pos = np.zeros((n, 3))
        pos[:, 2] = z
        g = potential_gradient(params, pos)[:, 2]
        if np.max(np.abs(g)) <= tol * 1e-2:
            break
        h = potential_hessian(params, pos)[2::3, 2::3]
        step = np.linalg.solve(h, g)
        # keep ordering; halve the step if ions would cross
        t = 1.0
        while t > 1e-8 and np.any(np.diff(z - t * step) <= 0):
            t *= 0.5
        z = z - t * step
    return z


def _finalize(params: CrystalParams, x: np.ndarray, opts: DEOptions,
              seed: int | None) -> EquilibriumConfiguration:
    n = params.n_ions
    pos, gauge = gauge_fix(x.reshape(n, 3),
                           snap_tol=LINEAR_RADIUS_TOL if opts.snap_linear else None)
    if gauge.snapped_to_axis:
        pos[:, 2] = _polish_axis(params, pos[:, 2], opts.tolerance)
    grad = potential_gradient(params, pos)
    gnorm = float(np.max(np.abs(grad)))
    cfg = EquilibriumConfiguration(params, pos, potential_energy(params, pos), gnorm,
                                   gauge, seed)
    if not gnorm <= opts.tolerance:
        raise ConvergenceError(
            f"gradient max-norm {gnorm:.3e} above tolerance {opts.tolerance:.1e}", best=cfg)
    return cfg


def find_equilibrium(params: CrystalParams, seed: int = 0,
                     opts: DEOptions | None = None) -> EquilibriumConfiguration:
    """Global search for the ground-state configuration.

    Deterministic given ``seed``. Raises ``ConvergenceError`` (carrying the best
    candidate) if the polished result does not meet ``opts.tolerance``.
    """
    opts = opts or DEOptions()
    n = params.n_ions
    if n < 2:
        raise ValueError("find_equilibrium needs at least two ions")
    dim = 3 * n
    half = _search_box(n)
    bounds = list(zip(-half, half))
    pop = opts.population or 15 * min(dim, 40)
    rng = np.random.default_rng(seed)
    init = rng.uniform(-half, half, size=(pop, dim))

    result = optimize.differential_evolution(
        lambda flat: _batch_energy(params, flat),
        bounds, strategy="rand1bin", maxiter=opts.max_generations, init=init,
        mutation=opts.mutation, recombination=opts.crossover, tol=opts.de_tol,
        polish=False, rng=rng, updating="deferred", vectorized=True)

    energies = np.asarray(result.population_energies)
    ranked = np.argsort(energies, kind="stable")[: max(1, opts.n_polish)]
    best_x, best_e = None, np.inf
    for idx in ranked:
        x, e = _polish(params, np.asarray(result.population[idx], dtype=float), opts)
        if e < best_e - 1e-12 * abs(e):
            best_x, best_e = x, e
    return _finalize(params, best_x, opts, seed)


def relax_from(params: CrystalParams, positions, opts: DEOptions | None = None,
               seed: int | None = None) -> EquilibriumConfiguration:
    """Local refinement of a given starting configuration (no global search)."""
    opts = opts or DEOptions()
    x0 = _as_positions(positions).ravel().copy()
    x, _ = _polish(params, x0, opts)
    return _finalize(params, x, opts, seed)


# ---------------------------------------------------------------------------
# order parameters and phase paths
# ---------------------------------------------------------------------------

def order_parameters(config) -> StructureReport:
    pos = config.positions if hasattr(config, "positions") else _as_positions(config)
    pos = pos[np.argsort(pos[:, 2], kind="stable")]
    radii = np.hypot(pos[:, 0], pos[:, 1])
    radius = float(radii.max())
    gaps = np.diff(pos[:, 2])
    min_gap = float(gaps.min()) if gaps.size else 0.0

    cutoff = radius / 4.0
    phi = np.arctan2(pos[:, 1], pos[:, 0])
    steps = []
    for i in range(len(pos) - 1):
        if radii[i] > cutoff and radii[i + 1] > cutoff:
            d = abs(phi[i + 1] - phi[i]) % (2 * np.pi)
            steps.append(min(d, 2 * np.pi - d))
    step = float(np.mean(steps)) if steps else 0.0

    if radius < LINEAR_RADIUS_TOL:
        phase = LINEAR1D
    elif min_gap < UNORDERED_GAP_TOL:
        phase = UNORDERED
    elif abs(step - np.pi) < ZIGZAG_ANGLE_TOL:
        phase = ZIGZAG2D
    else:
        phase = HELICAL3D
    return StructureReport(radius, min_gap, step, phase)


def path_alpha(path: PhasePath | str, n_ions: int) -> float:
    if isinstance(path, str):
        path = PATHS[path]
    return float(path.c * n_ions ** path.beta)


# ---------------------------------------------------------------------------
# transition scans
# ---------------------------------------------------------------------------

SELECTORS: dict[str, Callable[[StructureReport], float]] = {
    "R": lambda rep: rep.radius,
    "Delta": lambda rep: rep.min_z_gap,
    "mean_azimuthal_step": lambda rep: rep.mean_azimuthal_step,
}

_THRESHOLDS = {"R": LINEAR_RADIUS_TOL, "Delta": UNORDERED_GAP_TOL,
               "mean_azimuthal_step": np.pi - ZIGZAG_ANGLE_TOL}


@dataclass
class ScanPoint:
    alpha: float
    value: float
    report: StructureReport | None
    config: EquilibriumConfiguration | None
    error: str | None = None


@dataclass
class ScanResult:
    points: list
    critical_alpha: float | None
    selector: str


def _warm_start(prev: EquilibriumConfiguration, rng: np.random.Generator,
                jitter: float) -> np.ndarray:
    return prev.positions + jitter * rng.standard_normal(prev.positions.shape)


def scan_transition(n_ions: int, alphas: Sequence[float], selector: str = "R", *,
                    seed: int = 0, opts: DEOptions | None = None,
                    jitter: float = 1e-3) -> ScanResult:
    """Follow the equilibrium along a sequence of aspect ratios.

    The first point is found by global search; later points are warm-started
    from the previous solution plus seeded jitter. ``critical_alpha`` is the
    linear interpolation of the first threshold crossing of the selected order
    parameter, or None when no crossing occurs.
    """
    if selector not in SELECTORS:
        raise ValueError(f"unknown order parameter {selector!r}")
    opts = opts or DEOptions()
    rng = np.random.default_rng(seed)
    pick = SELECTORS[selector]
    points: list[ScanPoint] = []
    prev = None
    for a in alphas:
        params = CrystalParams(n_ions, float(a))
        try:
            if prev is None:
                cfg = find_equilibrium(params, seed=seed, opts=opts)
            else:
                cfg = relax_from(params, _warm_start(prev, rng, jitter), opts, seed)
        except ConvergenceError as exc:
            points.append(ScanPoint(float(a), float("nan"), None, exc.best, str(exc)))
            continue
        rep = order_parameters(cfg)
        points.append(ScanPoint(float(a), pick(rep), rep, cfg))
        prev = cfg
    return ScanResult(points, _first_crossing(points, _THRESHOLDS[selector]), selector)


def _first_crossing(points, threshold: float):
    ok = [p for p in points if p.error is None]
    for p, q in zip(ok, ok[1:]):
        below_p, below_q = p.value < threshold, q.value < threshold
        if below_p != below_q:
            return 0.5 * (p.alpha + q.alpha)
    return None


def linear_chain_critical_alpha(n_ions: int, opts: DEOptions | None = None) -> float:
    """Aspect ratio at which the linear chain loses transverse stability.

    Uses the on-axis equilibrium: the chain is stable while alpha^2 exceeds
    minus the lowest eigenvalue of the Coulomb part of the transverse Hessian.
    """
    opts = opts or DEOptions()
    params = CrystalParams(n_ions, 1e3)
    z0 = np.linspace(-1.0, 1.0, n_ions) * n_ions ** 0.6
    z = _polish_axis(params, z0, opts.tolerance)
    pos = np.zeros((n_ions, 3))
    pos[:, 2] = z
    hx = potential_hessian(params, pos)[0::3, 0::3] - params.alpha ** 2 * np.eye(n_ions)
    return float(np.sqrt(-np.linalg.eigvalsh(hx)[0]))


def critical_alpha(n_ions: int, lo: float, hi: float, *, selector: str = "R",
                   seed: int = 0, opts: DEOptions | None = None,
                   rel_tol: float = 1e-3, jitter: float = 1e-3) -> float:
    """Bisect for the aspect ratio where the selected order parameter crosses
    its phase threshold, between a sub-critical ``lo`` and super-critical ``hi``.

    Each probe is relaxed from the structure found at ``lo`` so the broken
    phase is always available to the local search.
    """
    opts = opts or DEOptions()
    pick, thr = SELECTORS[selector], _THRESHOLDS[selector]
    rng = np.random.default_rng(seed)
    base = find_equilibrium(CrystalParams(n_ions, lo), seed=seed, opts=opts)

    def broken(a):
        cfg = relax_from(CrystalParams(n_ions, a), _warm_start(base, rng, jitter), opts)
        return (pick(order_parameters(cfg)) >= thr) == (pick(order_parameters(base)) >= thr)

    if not broken(lo) or broken(hi):
        raise ValueError("critical_alpha needs lo inside and hi outside the broken phase")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if broken(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def with_positions(config: EquilibriumConfiguration, positions) -> EquilibriumConfiguration:
    return replace(config, positions=_as_positions(positions))
