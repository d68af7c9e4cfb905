"""Fickian diffusion matrices and sign properties of the closure coefficients."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvals

from .closures import (
    MaxwellStefanClosure,
    NovelClosure,
    OnsagerClosure,
    _offdiag,
    core_diagonal_onsager,
    ms_group_inverse,
)
from .errors import BinaryMixture, DimensionMismatch, InvalidParameter
from .groupinv import group_inverse, rank_deficient
from .mixture import GAS_CONSTANT, MixtureState, projection
from .transforms import onsager_matrix

IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class FickianMatrix:
    Dfick: np.ndarray
    context: str


def _onsager_L(state: MixtureState, onsager) -> np.ndarray:
    """Onsager matrix of a closure of any form, or the array itself."""
    if isinstance(onsager, (OnsagerClosure, MaxwellStefanClosure, NovelClosure)):
        return onsager_matrix(state, onsager)
    return np.asarray(onsager, dtype=float)


def ideal_isobaric_hessian(state: MixtureState) -> np.ndarray:
    """RT (M^-1 R^-1 - M^-1 e e^T M^-1 / c) for an ideal isobaric mixture."""
    state.require_strict()
    inv_m = 1.0 / state.M
    return GAS_CONSTANT * state.T * (
        np.diag(inv_m / state.partial_densities) - np.outer(inv_m, inv_m) / state.concentration
    )


def fickian_from_hessian(state: MixtureState, onsager, hessian) -> FickianMatrix:
    """M^-1 L H M / (RT) for a user-supplied free-energy Hessian H."""
    L = _onsager_L(state, onsager)
    H = np.asarray(hessian, dtype=float)
    D = (L @ H) * state.M[None, :] / state.M[:, None] / (GAS_CONSTANT * state.T)
    return FickianMatrix(D, "full-Hessian")


def fickian_ideal_isobaric(state: MixtureState, onsager) -> FickianMatrix:
    """Fickian matrix for molar fluxes against concentration gradients.

    D = M^-1 (L R^-1 - L M^-1 e e^T / c); the molar-mass vector is a left null
    vector.
    """
    state.require_strict()
    L = _onsager_L(state, onsager)
    inner = L / state.partial_densities[None, :] - np.outer(L @ (1.0 / state.M), np.ones(state.n_species)) / state.concentration
    return FickianMatrix(inner / state.M[:, None], "ideal-isobaric")


def fickian_molefraction_form(state: MixtureState, closure) -> FickianMatrix:
    """Matrix D~ with c D~ = L X^-1; for an MS closure also D~ = B# M.

    For a Maxwell-Stefan input both routes are evaluated and must agree.
    """
    state.require_strict()
    if isinstance(closure, MaxwellStefanClosure):
        via_b = molefraction_from_ms(state, closure)
        L = ms_group_inverse(state, closure).Asharp * state.partial_densities[None, :]
        via_l = molefraction_from_onsager(state, L)
        if np.linalg.norm(via_b - via_l) > IDENTITY_TOL * np.linalg.norm(via_b):
            raise DimensionMismatch("L-route and B-route mole-fraction matrices disagree")
        return FickianMatrix(via_l, "mole-fraction-form")
    return FickianMatrix(molefraction_from_onsager(state, _onsager_L(state, closure)), "mole-fraction-form")


def molefraction_from_onsager(state: MixtureState, L) -> np.ndarray:
    return np.asarray(L, dtype=float) / state.x[None, :] / state.concentration


def molefraction_from_ms(state: MixtureState, f) -> np.ndarray:
    return ms_group_inverse(state, f).Asharp * state.M[None, :]


def cb_matrix(state: MixtureState, f) -> np.ndarray:
    """c R^-1 B#, a mass-based alternative to the Fickian matrix."""
    return state.concentration * ms_group_inverse(state, f).Asharp / state.partial_densities[:, None]


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    max_imag: float
    min_real: float
    ok: bool


def spectrum(fm: FickianMatrix, imag_tol: float = 1e-8, real_tol: float = 1e-9) -> SpectrumReport:
    """Eigenvalues (balanced general solver) with relative realness/sign checks."""
    D = fm.Dfick if isinstance(fm, FickianMatrix) else np.asarray(fm, dtype=float)
    lam = eigvals(D)
    norm = np.linalg.norm(D, 2)
    max_imag = float(np.max(np.abs(lam.imag)))
    min_real = float(np.min(lam.real))
    ok = max_imag <= imag_tol * norm and min_real >= -real_tol * norm
    return SpectrumReport(lam, max_imag, min_real, bool(ok))


def fick_diag_bound_check(state: MixtureState, d) -> np.ndarray:
    """slack_i = D_ii - d_i (1 - y_i)(1 - x_i) for the core-diagonal closure."""
    d = np.asarray(d, dtype=float)
    L = core_diagonal_onsager(state.rho, state.y, state.M, d)
    D = fickian_ideal_isobaric(state, L).Dfick
    return np.diag(D) - d * (1.0 - state.y) * (1.0 - state.x)


def z_matrix_test(B) -> bool:
    """True when every off-diagonal entry is strictly negative."""
    B = np.asarray(B, dtype=float)
    off = ~np.eye(B.shape[0], dtype=bool)
    return bool(np.all(B[off] < 0))


def onsager_to_ms_matrix(state: MixtureState, L):
    """B = R P L# P^T, checked against (L R^-1)#.

    Returns the matrix and the relative mismatch between the two expressions.
    """
    state.require_strict()
    L = np.asarray(L, dtype=float)
    n = state.n_species
    e = np.ones(n)
    L_sharp = group_inverse(rank_deficient(L, e, e)).Asharp
    P = projection(state.y)
    rho_i = state.partial_densities
    B = rho_i[:, None] * (P @ L_sharp @ P.T)
    direct = group_inverse(rank_deficient(L / rho_i[None, :], state.y, e)).Asharp
    return B, float(np.linalg.norm(B - direct) / np.linalg.norm(direct))


@dataclass(frozen=True)
class PosdiagResult:
    ok: np.ndarray
    slack: np.ndarray

    @property
    def all_ok(self) -> bool:
        return bool(np.all(self.ok))


def posdiag_condition(state: MixtureState, S_off) -> PosdiagResult:
    """Per-species test of (S y)_i + 2 (S e)_i y_i / (N-2) <= <S e, e> y_i / ((N-2)(N-1)).

    The slack (right minus left side) divided by M_i equals the diagonal
    diffusivity d_i that the projected form assigns to a structured Onsager
    closure with this S.
    """
    n = state.n_species
    if n < 3:
        raise BinaryMixture("condition is defined for N >= 3")
    S = _offdiag(S_off)
    y = state.y
    row = S.sum(axis=1)
    lhs = S @ y + 2.0 / (n - 2) * row * y
    rhs = row.sum() * y / ((n - 2) * (n - 1))
    return PosdiagResult(lhs <= rhs, rhs - lhs)


@dataclass(frozen=True)
class FrictionSignCounterexample:
    """Ternary friction model whose tau stays positive while a coefficient turns negative.

    tau(y) = |y - y0|^2 tau1(y) + rho y1 y2 y3 A, with tau1 the friction
    matrix of unit coefficients and A = [[a-1, 1, -a], [1, a-1, -a], [-a, -a, 2a]].
    """

    a: float
    y0: np.ndarray
    rho: float = 1.0

    @property
    def A(self) -> np.ndarray:
        a = self.a
        return np.array([[a - 1.0, 1.0, -a], [1.0, a - 1.0, -a], [-a, -a, 2.0 * a]])

    def _opposite(self, y):
        # entry (i, k) holds the fraction of the third species
        y = np.asarray(y, dtype=float)
        return np.array([[0.0, y[2], y[1]], [y[2], 0.0, y[0]], [y[1], y[0], 0.0]])

    def _dist2(self, y):
        return float(np.sum((np.asarray(y, dtype=float) - self.y0) ** 2))

    def tau(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        unit = _unit_tau(self.rho, y)
        return self._dist2(y) * unit + self.rho * float(np.prod(y)) * self.A

    def friction(self, y) -> np.ndarray:
        """Closed-form coefficients |y - y0|^2 + y_[ik] A_ik (off-diagonal)."""
        return _offdiag(self._dist2(y) + self._opposite(y) * self.A)

    def ms_friction(self, y) -> np.ndarray:
        """Coefficients with tau_ik = -rho f_ik y_i y_k, i.e. |y - y0|^2 - y_[ik] A_ik."""
        return _offdiag(self._dist2(y) - self._opposite(y) * self.A)

    def ms_closure(self, y) -> MaxwellStefanClosure:
        return MaxwellStefanClosure(self.ms_friction(y))


def _unit_tau(rho, y):
    return rho * (np.diag(y) - np.outer(y, y))


def friction_sign_counterexample(a: float, y0, rho: float = 1.0) -> FrictionSignCounterexample:
    y0 = np.asarray(y0, dtype=float)
    if not a > 2:
        raise InvalidParameter("the construction requires a > 2")
    if y0.shape != (3,) or np.any(y0 <= 0) or abs(y0.sum() - 1.0) > 1e-9:
        raise InvalidParameter("y0 must be a strict ternary composition")
    return FrictionSignCounterexample(float(a), y0 / y0.sum(), float(rho))
