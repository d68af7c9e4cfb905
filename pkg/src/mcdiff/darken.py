"""Core-diagonal closures, the multicomponent Darken relation and molar MS forms.

Molar quantities (x, MS diffusivities, molar MS matrix) are used here; the
mass-based friction table is related by f_mol_ik = f_ik M_i M_k c / rho and
MS diffusivity = 1 / f_mol.
"""

from dataclasses import dataclass

import numpy as np

from .closures import (
    OnsagerClosure,
    _offdiag,
    core_diagonal_onsager,
    friction_table,
    ms_group_inverse,
)
from .errors import BinaryMixture, DegenerateTernary, DimensionMismatch, NonPositiveDiffusivity
from .mixture import MixtureState

TERNARY_DET_TOL = 1e-14


def _positive(v, what):
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise NonPositiveDiffusivity(f"{what} must be positive")
    return v


def darken_ms_diffusivities(x, d) -> np.ndarray:
    """MS diffusivities from self-diffusion coefficients: d_i d_j sum_k x_k / d_k.

    The diagonal of the returned table carries the same expression and is not
    used by any consumer.
    """
    d = _positive(d, "self-diffusion coefficients")
    x = np.asarray(x, dtype=float)
    if x.shape != d.shape:
        raise DimensionMismatch("x and d must have equal length")
    return np.outer(d, d) * float(np.sum(x / d))


@dataclass(frozen=True)
class SelfDiffusionModel:
    """Infinite-dilution table: ``D_dilute[i, k]`` is species i's self-diffusivity as x_k -> 1."""

    D_dilute: np.ndarray

    def __post_init__(self):
        table = _positive(self.D_dilute, "dilute self-diffusivities")
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise DimensionMismatch("self-diffusion table must be square")


def self_diffusion_mix(model: SelfDiffusionModel, x) -> np.ndarray:
    """Harmonic mixing rule 1/d_i = sum_k x_k / D_dilute[i, k]."""
    x = np.asarray(x, dtype=float)
    return 1.0 / (np.asarray(model.D_dilute) ** -1 @ x)


def vignes_binary(D12_x1to1, D12_x2to1, x1) -> float:
    """Geometric interpolation of the binary MS diffusivity between its dilute limits."""
    if D12_x1to1 <= 0 or D12_x2to1 <= 0:
        raise NonPositiveDiffusivity("Vignes endpoints must be positive")
    return float(D12_x1to1 ** x1 * D12_x2to1 ** (1.0 - x1))


def assemble_Bmol(x, Dms) -> np.ndarray:
    """Molar MS matrix: off-diagonal -x_i / D_ij, diagonal sum_{k != i} x_k / D_ik."""
    x = np.asarray(x, dtype=float)
    Dms = np.asarray(Dms, dtype=float)
    n = x.shape[0]
    if Dms.shape != (n, n):
        raise DimensionMismatch("MS diffusivity table must be N x N")
    off = ~np.eye(n, dtype=bool)
    _positive(Dms[off], "MS diffusivities")
    inv = np.zeros((n, n))
    inv[off] = 1.0 / Dms[off]
    return -x[:, None] * inv + np.diag(inv @ x)


def darken_bmol_closed_form(x, d) -> np.ndarray:
    """D^-1 (I - x (x) D^-1 e / <x, D^-1 e>) for D = diag(d)."""
    x = np.asarray(x, dtype=float)
    w = 1.0 / np.asarray(d, dtype=float)
    return w[:, None] * (np.eye(x.shape[0]) - np.outer(x, w) / float(x @ w))


def recover_core_diagonal(x, Bmol) -> np.ndarray:
    """Invert the Darken relation: self-diffusion coefficients from a molar MS matrix.

    Off-diagonal MS diffusivities satisfy log D_ij = q_i + q_j with
    q_i = log d_i + log(s)/2, s = sum_k x_k / d_k. The q are fitted by least
    squares over all pairs, then s follows from the mixing identity.
    """
    x = np.asarray(x, dtype=float)
    Bmol = np.asarray(Bmol, dtype=float)
    n = x.shape[0]
    if n < 3:
        raise BinaryMixture("a binary MS diffusivity fixes only one combination of d")
    rows, rhs = [], []
    for i in range(n):
        for j in range(i + 1, n):
            row = np.zeros(n)
            row[[i, j]] = 1.0
            rows.append(row)
            rhs.append(np.log(-x[i] / Bmol[i, j]))
    q = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)[0]
    scaled = np.exp(q)
    root_s = float(np.sum(x / scaled))
    return scaled / root_s


def friction_from_ms_diffusivities(state: MixtureState, Dms) -> np.ndarray:
    """Mass-based friction f_ik = rho / (c M_i M_k Dms_ik)."""
    Dms = np.asarray(Dms, dtype=float)
    n = state.n_species
    off = ~np.eye(n, dtype=bool)
    f = np.zeros((n, n))
    f[off] = state.rho / (state.concentration * np.outer(state.M, state.M)[off] * Dms[off])
    return f


def ms_diffusivities_from_friction(state: MixtureState, f) -> np.ndarray:
    """MS diffusivity 1 / f_mol with f_mol_ik = f_ik M_i M_k c / rho; diagonal left at inf."""
    f = friction_table(f, state.n_species)
    f_mol = f * np.outer(state.M, state.M) * state.concentration / state.rho
    out = np.full(f.shape, np.inf)
    off = ~np.eye(state.n_species, dtype=bool)
    out[off] = 1.0 / f_mol[off]
    return out


@dataclass(frozen=True)
class TernaryDiagonal:
    """Core-diagonal image of a ternary MS closure: J = -P^T (Dt + Y Kt) P^T R grad."""

    det: float
    D_tilde: np.ndarray
    K_tilde: np.ndarray

    def d(self, M) -> np.ndarray:
        """Diagonal diffusivities of the projected form (C)."""
        return np.diag(self.D_tilde) / np.asarray(M, dtype=float)


def ternary_det(y, f) -> float:
    return float(y[0] * f[0, 1] * f[0, 2] + y[1] * f[0, 1] * f[1, 2] + y[2] * f[0, 2] * f[1, 2])


def ternary_explicit_fluxes(state: MixtureState, f, d_forces):
    """Closed-form inverse of the ternary MS system -B J = d.

    Parameters
    ----------
    state : MixtureState
        Three species.
    f : array_like, shape (3, 3)
        Symmetric friction table.
    d_forces : array_like, shape (3,) or (3, dim)
        Driving forces, e.g. from :func:`mcdiff.mixture.driving_forces`.

    Returns
    -------
    J : ndarray
        Diffusion fluxes, J = -(1/det) W d with W_ij = (delta_ij - y_i) g_j
        and g = (f_23, f_13, f_12).
    diag : TernaryDiagonal
    """
    if state.n_species != 3:
        raise DimensionMismatch("ternary formula needs exactly three species")
    f = friction_table(f, 3)
    y = state.y
    det = ternary_det(y, f)
    if det <= TERNARY_DET_TOL * float(np.max(np.abs(f))) ** 2:
        raise DegenerateTernary(f"reduced determinant {det!r} is too small")
    g = np.array([f[1, 2], f[0, 2], f[0, 1]])
    W = (np.eye(3) - y[:, None]) * g[None, :]
    J = -(W @ np.asarray(d_forces, dtype=float)) / det
    return J, TernaryDiagonal(det, np.diag(g / det), np.zeros((3, 3)))


def core_diagonal_fo_coeffs(state: MixtureState, d) -> OnsagerClosure:
    """Structured Onsager closure of the core-diagonal form with diffusivities d."""
    state.require_strict()
    d = np.asarray(d, dtype=float)
    L = core_diagonal_onsager(state.rho, state.y, state.M, d)
    lam = d * state.M
    mean = float(state.y @ lam)
    S = _offdiag(-(lam[:, None] + lam[None, :] - mean))
    A = lam - state.y * (2.0 * lam - mean)
    return OnsagerClosure(0.5 * (L + L.T), A, S)


def ms_diagonal_fluxes(state: MixtureState, f, d_forces):
    """Generic-path counterpart of :func:`ternary_explicit_fluxes`: J = -B# d."""
    Bsharp = ms_group_inverse(state, f).Asharp
    return -Bsharp @ np.asarray(d_forces, dtype=float)
