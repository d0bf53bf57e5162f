"""Harmonic model around an equilibrium: coupling matrix, baths and disorder.

Coordinates are ordered (x0, y0, z0, x1, y1, z1, ...), so the row of ion i
along axis a (0=x, 1=y, 2=z) is ``3*i + a``. Ion indices follow the z-sorted
order of the gauge-fixed equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .crystal import (LINEAR_RADIUS_TOL, CrystalParams, EquilibriumConfiguration,
                      potential_hessian)
from .errors import InvalidRegionError, UnstableEquilibriumError

AXES = {"x": 0, "y": 1, "z": 2}
DISORDER_AXES = {"xy": (0, 1), "x": (0,), "xyz": (0, 1, 2)}

# stiffness given to the rigid rotation about the trap axis of off-axis crystals
ROTATION_PIN = 1e-4


@dataclass(frozen=True)
class DisorderSpec:
    """Pinning disorder: floor(N/2) ions get V_ii -> (1 + s d) V_ii, s = +-1."""

    d: float
    seed: int
    n_ions: int
    axes: str = "xy"

    def __post_init__(self):
        if self.d < 0:
            raise ValueError(f"disorder strength must be nonnegative, got {self.d}")
        if self.axes not in DISORDER_AXES:
            raise ValueError(f"disorder axes must be one of {sorted(DISORDER_AXES)}")

    def draw(self):
        rng = np.random.default_rng(self.seed)
        affected = np.sort(rng.choice(self.n_ions, size=self.n_ions // 2, replace=False))
        signs = rng.choice(np.array([-1.0, 1.0]), size=affected.size)
        return affected, signs

    @property
    def affected_ions(self) -> np.ndarray:
        return self.draw()[0]

    @property
    def signs(self) -> np.ndarray:
        return self.draw()[1]


@dataclass(frozen=True)
class CouplingMatrix:
    v: np.ndarray
    n_ions: int
    disorder_applied: DisorderSpec | None = None
    rotation_generator: np.ndarray | None = None
    rotation_pin: float = 0.0
    renormalization: str = "none"
    min_eigenvalue: float = field(default=float("nan"), compare=False)

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    def index(self, ion: int, axis) -> int:
        a = AXES[axis] if isinstance(axis, str) else int(axis)
        return 3 * ion + a

    @property
    def coordinate_index(self) -> dict:
        return {(i, ax): 3 * i + a for i in range(self.n_ions) for ax, a in AXES.items()}


@dataclass(frozen=True)
class BathConfig:
    gamma0: float
    t_left: float
    t_right: float
    left_ions: tuple
    right_ions: tuple
    n_ions: int
    cutoff: float = math.inf

    def __post_init__(self):
        if not self.gamma0 >= 0:
            raise ValueError("gamma0 must be nonnegative")
        if self.t_left < 0 or self.t_right < 0:
            raise ValueError("bath temperatures must be nonnegative")
        left, right = set(self.left_ions), set(self.right_ions)
        if not left or not right:
            raise InvalidRegionError("both bath regions must be nonempty")
        if left & right:
            raise InvalidRegionError(f"bath regions overlap on ions {sorted(left & right)}")
        if min(left | right) < 0 or max(left | right) >= self.n_ions:
            raise InvalidRegionError("bath region refers to a nonexistent ion")

    def _projector(self, ions) -> np.ndarray:
        diag = np.zeros(3 * self.n_ions)
        for i in ions:
            diag[3 * i] = diag[3 * i + 1] = 1.0
        return np.diag(diag)

    @property
    def p_left(self) -> np.ndarray:
        return self._projector(self.left_ions)

    @property
    def p_right(self) -> np.ndarray:
        return self._projector(self.right_ions)

    @property
    def p_total(self) -> np.ndarray:
        return self._projector(tuple(self.left_ions) + tuple(self.right_ions))

    @property
    def noise_matrix(self) -> np.ndarray:
        """A = 2 k_B (T_L P_L + T_R P_R)."""
        return 2.0 * (self.t_left * self.p_left + self.t_right * self.p_right)

    def with_temperatures(self, t_left: float, t_right: float) -> "BathConfig":
        return replace(self, t_left=t_left, t_right=t_right)


def rotation_generator(positions) -> np.ndarray | None:
    """Unit displacement field of a rigid rotation about z, or None on axis."""
    pos = np.asarray(positions, dtype=float)
    if np.hypot(pos[:, 0], pos[:, 1]).max() < LINEAR_RADIUS_TOL:
        return None
    t = np.zeros_like(pos)
    t[:, 0] = -pos[:, 1]
    t[:, 1] = pos[:, 0]
    t = t.ravel()
    return t / np.linalg.norm(t)


def check_stability(v: np.ndarray, what: str = "coupling matrix") -> float:
    evals = np.linalg.eigvalsh(v)
    if not evals[0] > 1e-12 * max(abs(evals[-1]), 1.0):
        raise UnstableEquilibriumError(
            f"{what} is not positive definite (most negative eigenvalue {evals[0]:.6e})",
            min_eigenvalue=float(evals[0]))
    return float(evals[0])


def build_hessian(params: CrystalParams, config: EquilibriumConfiguration, *,
                  rotation_pin: float = ROTATION_PIN) -> CouplingMatrix:
    """Coupling matrix V (Hessian of the potential) at an equilibrium.

    Off-axis crystals in a cylindrical trap have an exact zero mode (rigid
    rotation about z); it is given stiffness ``rotation_pin`` so that V is
    positive definite. All other eigenpairs are left untouched.
    """
    v = potential_hessian(params, config.positions)
    t = rotation_generator(config.positions)
    pin = 0.0
    if t is not None and rotation_pin > 0:
        v = v + rotation_pin * np.outer(t, t)
        pin = rotation_pin
    v = 0.5 * (v + v.T)
    lam = check_stability(v)
    return CouplingMatrix(v, config.n_ions, None, t, pin, "none", lam)


def apply_disorder(cm: CouplingMatrix, spec: DisorderSpec, *,
                   protect_rotation: bool = True) -> CouplingMatrix:
    """Multiply selected diagonal entries by (1 +- d).

    With ``protect_rotation`` (and a crystal that has a rotation zero mode) the
    perturbation is projected off the rigid-rotation direction afterwards, so
    the pinned rotation keeps its stiffness instead of going soft or unstable.
    """
    if spec.n_ions != cm.n_ions:
        raise ValueError("disorder spec and coupling matrix disagree on N")
    v = cm.v.copy()
    if spec.d == 0:
        return replace(cm, v=v, disorder_applied=spec)
    affected, signs = spec.draw()
    for ion, s in zip(affected, signs):
        for a in DISORDER_AXES[spec.axes]:
            k = 3 * ion + a
            v[k, k] = cm.v[k, k] * (1.0 + s * spec.d)
    t = cm.rotation_generator
    if protect_rotation and t is not None:
        dv = v - cm.v
        proj = np.eye(cm.dim) - np.outer(t, t)
        v = cm.v + proj @ dv @ proj
        v = 0.5 * (v + v.T)
    lam = check_stability(v, "disordered coupling matrix")
    return replace(cm, v=v, disorder_applied=spec, min_eigenvalue=lam)


def make_bath(gamma0: float, t_left: float, t_right: float, n_ions: int, *,
              region_fraction: float | None = 0.1, left_ions=None, right_ions=None,
              cutoff: float = math.inf) -> BathConfig:
    """Bath acting on the transverse coordinates of the two crystal ends.

    Either explicit ion sets or ``region_fraction``: ceil(fraction * N) ions
    from each end (ions are indexed in ascending z).
    """
    if left_ions is None or right_ions is None:
        if region_fraction is None or not region_fraction > 0:
            raise InvalidRegionError("region_fraction must be positive")
        k = math.ceil(region_fraction * n_ions - 1e-12)
        if k > n_ions // 2:
            raise InvalidRegionError(
                f"{k} ions per side exceeds half of the crystal ({n_ions} ions)")
        left_ions = range(k)
        right_ions = range(n_ions - k, n_ions)
    left, right = tuple(sorted(int(i) for i in left_ions)), tuple(sorted(int(i) for i in right_ions))
    if len(left) > n_ions / 2 or len(right) > n_ions / 2:
        raise InvalidRegionError("each bath region may cover at most half of the crystal")
    return BathConfig(float(gamma0), float(t_left), float(t_right), left, right, n_ions, cutoff)


def draw_stable_disorder(cm: CouplingMatrix, d: float, seeds, n_ions: int | None = None, *,
                         axes: str = "xy", protect_rotation: bool = True):
    """First seed in ``seeds`` whose disordered matrix stays positive definite.

    Soft modes of zig-zag and helical crystals are far softer than d * V_ii,
    so a sizeable fraction of raw draws is unstable; those are rejected.
    Returns (coupling matrix, spec, number of rejected draws).
    """
    n_ions = n_ions or cm.n_ions
    rejected = 0
    last = None
    for seed in seeds:
        spec = DisorderSpec(d, int(seed), n_ions, axes)
        try:
            return apply_disorder(cm, spec, protect_rotation=protect_rotation), spec, rejected
        except UnstableEquilibriumError as exc:
            rejected += 1
            last = exc
    raise UnstableEquilibriumError(
        f"no stable disorder realization after {rejected} draws at d = {d}",
        min_eigenvalue=None if last is None else last.min_eigenvalue)
