"""1-D isothermal, isobaric diffusion of an ideal mixture with no-flux walls.

Cells store partial densities. Each explicit Euler step evaluates the closure
at the cell faces (arithmetic-mean compositions, renormalized), takes
two-point differences of ln x_i / M_i as the gradient of mu_i/(RT), and
applies the conservative update

    rho_i <- rho_i - dt / dz * (F_i,right - F_i,left)

with zero flux through both walls.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .closures import _diag_embed, _offdiag, core_diagonal_onsager, ms_matrix, novel_onsager
from .errors import DimensionMismatch, MixtureError, StabilityViolation, ZeroFraction
from .groupinv import group_inverse_batch
from .transforms import zero_rowsum_shift_vector

DT_SAFETY = 0.25
DT_LIMIT = 0.5
ZETA_TOL = 1e-12


class InvariantBreach(MixtureError):
    """A monitored invariant (positivity, entropy production) failed during a run."""


def _molar_fractions(y, M):
    n = y / M
    return n / n.sum(axis=-1, keepdims=True)


# Closure models evaluated on a stack of face states -----------------------

@dataclass(frozen=True)
class FickOnsagerModel:
    """L = R (A + S Y) with constant off-diagonal S and A = -diag(S y), so L e = 0."""

    S: np.ndarray

    def onsager(self, rho, y, M):
        S = _offdiag(self.S)
        A = -np.einsum("ik,...k->...i", S, y)
        return (rho * y)[..., :, None] * (_diag_embed(A) + S * y[..., None, :])


@dataclass(frozen=True)
class MaxwellStefanModel:
    """L = B(y)# R for a constant friction table."""

    f: np.ndarray

    def onsager(self, rho, y, M):
        return _ms_onsager_batch(rho, y, self.f)[0]


@dataclass(frozen=True)
class CoreDiagonalModel:
    d: np.ndarray

    def onsager(self, rho, y, M):
        return core_diagonal_onsager(rho, y, M, self.d)


@dataclass(frozen=True)
class NovelModel:
    d: np.ndarray
    K: np.ndarray

    def onsager(self, rho, y, M):
        return novel_onsager(rho, y, M, self.d, self.K)


@dataclass(frozen=True)
class DarkenModel:
    """Core-diagonal closure with d from the harmonic self-diffusion mixing rule."""

    D_dilute: np.ndarray

    def onsager(self, rho, y, M):
        x = _molar_fractions(y, M)
        d = 1.0 / (x @ (1.0 / np.asarray(self.D_dilute)).T)
        return core_diagonal_onsager(rho, y, M, d)


@dataclass(frozen=True)
class ProjectedImageModel:
    """Projected diagonal form obtained from a friction table face by face.

    Each evaluation runs (B) -> (A) -> (C) on the face state and returns the
    Onsager matrix of the resulting (d, K), which must coincide with that of
    :class:`MaxwellStefanModel` up to rounding.
    """

    f: np.ndarray

    def onsager(self, rho, y, M):
        return _projected_image_onsager(rho, y, M, self.f)


def _ms_onsager_batch(rho, y, f):
    B = ms_matrix(y, f)
    B_sharp = group_inverse_batch(B, y, np.ones(y.shape[-1]))
    return B_sharp * (rho * y)[..., None, :], B, B_sharp


def _projected_image_onsager(rho, y, M, f):
    n = y.shape[-1]
    f = _offdiag(f)
    L, B, B_sharp = _ms_onsager_batch(rho, y, f)
    x = _molar_fractions(y, M)
    if n == 2:
        lam = L[..., 0, 0] / (rho * y[..., 0] * y[..., 1] * (M[0] * y[..., 1] + M[1] * y[..., 0]))
        d = np.repeat(lam[..., None], 2, axis=-1)
        return novel_onsager(rho, y, M, d, np.zeros((2, 2)))
    diag_B = np.diagonal(B, axis1=-2, axis2=-1)
    self_f = np.maximum(1e-6, np.min(np.where(diag_B > 0, diag_B, np.inf), axis=-1))
    F = f + self_f[..., None, None] * np.eye(n)
    a_tilde = 1.0 / np.einsum("...ik,...k->...i", F, y)
    S_tilde = a_tilde[..., :, None] * (F @ B_sharp - 1.0)
    A = a_tilde + np.diagonal(S_tilde, axis1=-2, axis2=-1) * y
    S = _offdiag(S_tilde)
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    shift = zero_rowsum_shift_vector(S)
    shifted = S + shift[..., :, None] + shift[..., None, :]
    c_over_rho = np.sum(y / M, axis=-1)
    d = A / M + c_over_rho[..., None] * np.diagonal(shifted, axis1=-2, axis2=-1) * x
    K = c_over_rho[..., None, None] * _offdiag(shifted)
    return novel_onsager(rho, y, M, d, K)


# Configuration and state ---------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """Scenario for :func:`run`.

    ``initial_y`` has shape (n_cells, N). ``dt=None`` selects the automatic
    step 0.25 dz^2 / d_eff, with d_eff the largest Fickian eigenvalue over all
    faces of the initial profile. ``output_every`` is the monitor cadence in
    steps.
    """

    n_cells: int
    length: float
    t_end: float
    closure: object
    M: np.ndarray
    initial_y: np.ndarray
    T: float = 298.15
    rho: float = 1.0
    dt: Optional[float] = None
    output_every: int = 1
    species: Sequence[str] = ()
    keep_profiles: bool = False

    def __post_init__(self):
        y = np.asarray(self.initial_y, dtype=float)
        M = np.asarray(self.M, dtype=float)
        if self.n_cells < 3:
            raise DimensionMismatch("need at least three cells")
        if y.shape != (self.n_cells, M.shape[0]):
            raise DimensionMismatch(f"initial profile must have shape ({self.n_cells}, {M.shape[0]})")
        if np.any(y <= 0):
            raise ZeroFraction("initial profile must be strictly positive")
        if np.max(np.abs(y.sum(axis=1) - 1.0)) > 1e-9:
            raise DimensionMismatch("each initial composition must sum to one")
        if self.length <= 0 or self.t_end < 0 or self.rho <= 0 or self.T <= 0:
            raise DimensionMismatch("length, density and temperature must be positive")
        if self.output_every < 1:
            raise DimensionMismatch("output_every must be at least 1")

    @property
    def dz(self) -> float:
        return self.length / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dz


@dataclass
class SimState:
    t: float
    y: np.ndarray
    steps: int = 0

    def partial_densities(self, rho: float) -> np.ndarray:
        return rho * self.y


@dataclass
class MonitorReport:
    t: list = field(default_factory=list)
    min_fraction: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    zeta_total: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    lowest_fraction: float = np.inf
    worst_zeta_ratio: float = 0.0
    max_mass_drift: float = 0.0
    dt: float = 0.0
    steps: int = 0

    def record(self, state: SimState, diag: "Diagnostics", keep_profile: bool):
        self.t.append(state.t)
        self.min_fraction.append(diag.min_fraction)
        self.mass.append(diag.mass.copy())
        self.zeta_total.append(diag.zeta_total)
        if keep_profile:
            self.profiles.append((state.t, state.y.copy()))


@dataclass(frozen=True)
class FaceFluxes:
    J: np.ndarray          # (n_cells - 1, N)
    grad: np.ndarray       # (n_cells - 1, N)
    L: np.ndarray          # (n_cells - 1, N, N)
    y_face: np.ndarray


@dataclass(frozen=True)
class Diagnostics:
    min_fraction: float
    mass: np.ndarray
    zeta_total: float
    zeta_scale: float


def initial_state(config: SimConfig) -> SimState:
    y = np.asarray(config.initial_y, dtype=float)
    return SimState(0.0, y / y.sum(axis=1, keepdims=True))


def face_fluxes(state: SimState, config: SimConfig) -> FaceFluxes:
    M = np.asarray(config.M, dtype=float)
    y = state.y
    if np.any(y <= 0):
        raise ZeroFraction("a cell lost a species; ln x is undefined")
    x = _molar_fractions(y, M)
    log_x = np.log(x)
    grad = (log_x[1:] - log_x[:-1]) / config.dz / M
    y_face = 0.5 * (y[1:] + y[:-1])
    y_face /= y_face.sum(axis=1, keepdims=True)
    L = config.closure.onsager(config.rho, y_face, M)
    J = -np.einsum("fij,fj->fi", L, grad)
    return FaceFluxes(J, grad, L, y_face)


def effective_diffusivity(L, y_face, M, rho) -> float:
    """Largest eigenvalue modulus of the face Fickian matrices."""
    rho_i = rho * y_face
    c = np.sum(rho_i / M, axis=-1)
    LM = np.einsum("...ij,j->...i", L, 1.0 / M)
    D = (L / rho_i[..., None, :] - LM[..., :, None] / c[..., None, None]) / M[:, None]
    return float(np.max(np.abs(np.linalg.eigvals(D))))


def auto_dt(config: SimConfig, state: Optional[SimState] = None) -> float:
    state = initial_state(config) if state is None else state
    fl = face_fluxes(state, config)
    d_eff = effective_diffusivity(fl.L, fl.y_face, np.asarray(config.M, dtype=float), config.rho)
    if d_eff <= 0:
        return config.t_end or 1.0
    return DT_SAFETY * config.dz ** 2 / d_eff


def diagnostics(state: SimState, config: SimConfig, fluxes: Optional[FaceFluxes] = None) -> Diagnostics:
    """Minimum fraction, per-species mass and integrated entropy production."""
    fluxes = face_fluxes(state, config) if fluxes is None else fluxes
    mass = config.rho * state.y.sum(axis=0) * config.dz
    zeta = -np.sum(fluxes.J * fluxes.grad) * config.dz
    scale = np.sum(np.abs(fluxes.J) * np.abs(fluxes.grad)) * config.dz
    return Diagnostics(float(state.y.min()), mass, float(zeta), float(scale))


def step(state: SimState, config: SimConfig, dt: float, fluxes: Optional[FaceFluxes] = None,
         check_stability: bool = True) -> SimState:
    """One explicit Euler step; returns a new state."""
    fluxes = face_fluxes(state, config) if fluxes is None else fluxes
    M = np.asarray(config.M, dtype=float)
    if check_stability:
        d_eff = effective_diffusivity(fluxes.L, fluxes.y_face, M, config.rho)
        if dt * d_eff > DT_LIMIT * config.dz ** 2:
            raise StabilityViolation(
                f"dt={dt:.3e} exceeds the bound {DT_LIMIT * config.dz ** 2 / d_eff:.3e}"
            )
    n_species = state.y.shape[1]
    F = np.zeros((config.n_cells + 1, n_species))
    F[1:-1] = fluxes.J
    rho_i = config.rho * state.y - dt / config.dz * (F[1:] - F[:-1])
    return SimState(state.t + dt, rho_i / config.rho, state.steps + 1)


def _check_entropy(report: MonitorReport, diag: Diagnostics, t: float):
    if diag.zeta_scale <= 0:
        return
    ratio = diag.zeta_total / diag.zeta_scale
    if ratio < -ZETA_TOL:
        raise InvariantBreach(f"negative entropy production {diag.zeta_total!r} at t={t!r}")
    report.worst_zeta_ratio = min(report.worst_zeta_ratio, ratio)


def run(config: SimConfig, n_steps: Optional[int] = None, check_stability: bool = True):
    """Integrate to ``t_end`` (or for exactly ``n_steps`` steps) and collect monitors.

    Positivity loss, negative entropy production beyond rounding, and an
    unstable step size abort the run with an exception.
    """
    state = initial_state(config)
    dt = config.dt if config.dt is not None else auto_dt(config, state)
    clip_last = n_steps is None
    if n_steps is None:
        n_steps = int(np.ceil(config.t_end / dt - 1e-9)) if config.t_end > 0 else 0
    report = MonitorReport(dt=dt)
    fluxes = face_fluxes(state, config)
    diag = diagnostics(state, config, fluxes)
    _check_entropy(report, diag, state.t)
    report.record(state, diag, config.keep_profiles)
    report.lowest_fraction = diag.min_fraction
    mass0 = diag.mass
    for k in range(n_steps):
        h = dt
        if clip_last and k == n_steps - 1:
            h = min(dt, config.t_end - state.t)
        state = step(state, config, h, fluxes, check_stability)
        if state.y.min() <= 0:
            raise InvariantBreach(f"fraction became non-positive at t={state.t!r}")
        fluxes = face_fluxes(state, config)
        diag = diagnostics(state, config, fluxes)
        _check_entropy(report, diag, state.t)
        report.lowest_fraction = min(report.lowest_fraction, diag.min_fraction)
        drift = float(np.max(np.abs(diag.mass - mass0) / mass0))
        report.max_mass_drift = max(report.max_mass_drift, drift)
        if (k + 1) % config.output_every == 0 or k == n_steps - 1:
            report.record(state, diag, config.keep_profiles)
    report.steps = n_steps
    return state, report
