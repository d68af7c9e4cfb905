"""Flux closures: Fick-Onsager (A), Maxwell-Stefan (B), projected diagonal (C).

All three return diffusion fluxes J with the same shape as the gradient of
mu/(RT) they are given, and every J has zero column sums.

The array kernels (``ms_matrix``, ``novel_onsager``, ``core_diagonal_onsager``)
accept fraction vectors with leading batch axes so that the simulator can
evaluate all cell faces at once.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AsymmetricFriction, DimensionMismatch, KernelMismatch, NotSymmetric
from .groupinv import GroupInverseResult, group_inverse, psd_on_subspace, rank_deficient
from .mixture import MixtureState, as_gradient, projection

FRICTION_SYM_TOL = 1e-12
CLOSURE_TOL = 1e-10


def _offdiag(a):
    a = np.array(a, dtype=float)
    idx = np.arange(a.shape[-1])
    a[..., idx, idx] = 0.0
    return a


def _diag_embed(v):
    v = np.asarray(v)
    out = np.zeros(v.shape + (v.shape[-1],))
    idx = np.arange(v.shape[-1])
    out[..., idx, idx] = v
    return out


def friction_table(f, n_species: Optional[int] = None) -> np.ndarray:
    """Validate a friction table; returns a copy with zeroed diagonal."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise DimensionMismatch("friction table must be square")
    if n_species is not None and f.shape[0] != n_species:
        raise DimensionMismatch(f"friction table must be {n_species}x{n_species}")
    f = _offdiag(f)
    scale = max(float(np.max(np.abs(f))), np.finfo(float).tiny)
    if np.max(np.abs(f - f.T)) > FRICTION_SYM_TOL * scale:
        raise AsymmetricFriction("friction coefficients must satisfy f_ik = f_ki")
    return 0.5 * (f + f.T)


def ms_matrix(y, f):
    """B(y) with B_ij = -y_i f_ij (i != j) and B_ii = sum_{k != i} y_k f_ik.

    ``y`` may carry leading batch axes; ``f`` must have a zero diagonal.
    """
    y = np.asarray(y, dtype=float)
    B = -y[..., :, None] * f
    return B + _diag_embed(np.einsum("...ik,...k->...i", f, y))


def assemble_B(state: MixtureState, f) -> np.ndarray:
    return ms_matrix(state.y, friction_table(f, state.n_species))


def assemble_tau(state: MixtureState, f) -> np.ndarray:
    """Friction matrix tau = B R, symmetric with vanishing row and column sums."""
    f = friction_table(f, state.n_species)
    tau = -state.rho * f * np.outer(state.y, state.y)
    return tau - np.diag(tau.sum(axis=1))


def novel_onsager(rho, y, M, d, K):
    """L = P^T R (D + K X) M P for (batched) fractions y.

    ``d`` and ``K`` may be shared or carry the same batch axes as ``y``.
    """
    y = np.asarray(y, dtype=float)
    M = np.asarray(M, dtype=float)
    moles = y / M
    x = moles / moles.sum(axis=-1, keepdims=True)
    inner = _diag_embed(np.broadcast_to(d, y.shape)) + K * x[..., None, :]
    core = (rho * y)[..., :, None] * inner * M[None, :]
    P = projection(y)
    return np.swapaxes(P, -1, -2) @ core @ P


def core_diagonal_onsager(rho, y, M, d):
    """Closed form of the K = 0 case with lambda = d M.

    L_ij = rho_i (lambda_i delta_ij - y_j (lambda_i + lambda_j - sum_k y_k lambda_k))
    """
    y = np.asarray(y, dtype=float)
    lam = np.asarray(d, dtype=float) * np.asarray(M, dtype=float)
    lam = np.broadcast_to(lam, y.shape)
    mean = np.sum(y * lam, axis=-1)[..., None, None]
    cross = lam[..., :, None] + lam[..., None, :] - mean
    rho_i = rho * y
    return rho_i[..., :, None] * (_diag_embed(lam) - y[..., None, :] * cross)


@dataclass(frozen=True)
class OnsagerClosure:
    """Form (A): J = -L grad(mu/RT), optionally with L = R (A + S Y)."""

    L: np.ndarray
    A_diag: Optional[np.ndarray] = None
    S_off: Optional[np.ndarray] = None

    @property
    def has_structure(self) -> bool:
        return self.A_diag is not None and self.S_off is not None


@dataclass(frozen=True)
class MaxwellStefanClosure:
    """Form (B): symmetric friction coefficients f_ik; diagonal is unused."""

    f: np.ndarray

    def B(self, state: MixtureState) -> np.ndarray:
        return ms_matrix(state.y, self.f)

    def tau(self, state: MixtureState) -> np.ndarray:
        return assemble_tau(state, self.f)


@dataclass(frozen=True)
class NovelClosure:
    """Form (C): diagonal diffusivities d and symmetric off-diagonal K, K e = 0."""

    d: np.ndarray
    K: np.ndarray

    def D_matrix(self, state: MixtureState) -> np.ndarray:
        s = np.sqrt(state.require_strict().x)
        return np.diag(self.d) + s[:, None] * self.K * s[None, :]


def onsager_closure(L, A_diag=None, S_off=None, state: Optional[MixtureState] = None,
                    validate: bool = True) -> OnsagerClosure:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionMismatch("L must be square")
    if (A_diag is None) != (S_off is None):
        raise DimensionMismatch("structure needs both A_diag and S_off")
    if A_diag is not None:
        A_diag = np.asarray(A_diag, dtype=float)
        S_off = np.asarray(S_off, dtype=float)
    closure = OnsagerClosure(L, A_diag, S_off)
    if validate:
        check_onsager(closure, state)
    return closure


def check_onsager(closure: OnsagerClosure, state: Optional[MixtureState] = None):
    L = closure.L
    n = L.shape[0]
    norm = np.linalg.norm(L, 2)
    if np.linalg.norm(L - L.T, 2) > CLOSURE_TOL * norm:
        raise NotSymmetric("Onsager matrix must be symmetric")
    if np.linalg.norm(L @ np.ones(n)) > CLOSURE_TOL * norm:
        raise KernelMismatch("Onsager matrix must satisfy L e = 0")
    cert = psd_on_subspace(L, np.ones(n))
    if not cert.ok:
        raise NotSymmetric(f"Onsager matrix is indefinite on e-perp (min eig {cert.min_eig:.3e})")
    if closure.has_structure:
        S = closure.S_off
        if np.any(np.diag(S) != 0) or np.max(np.abs(S - S.T)) > CLOSURE_TOL * max(1.0, np.max(np.abs(S))):
            raise NotSymmetric("S must be symmetric with zero diagonal")
        if state is not None:
            rebuilt = structured_onsager(state, closure.A_diag, S)
            if np.linalg.norm(rebuilt - L, 2) > CLOSURE_TOL * max(norm, np.finfo(float).tiny):
                raise KernelMismatch("L does not match R (A + S Y)")
    return closure


def structured_onsager(state: MixtureState, A_diag, S_off) -> np.ndarray:
    """R (A + S Y) for a diagonal A and off-diagonal S."""
    rho_i = state.partial_densities
    return rho_i[:, None] * (np.diag(A_diag) + np.asarray(S_off) * state.y[None, :])


def structure_from_onsager(state: MixtureState, L) -> OnsagerClosure:
    """Read off (A, S) from L = R (A + S Y) on a strict state."""
    state.require_strict()
    L = np.asarray(L, dtype=float)
    rho_i = state.partial_densities
    S = _offdiag(L / np.outer(rho_i, state.y))
    S = 0.5 * (S + S.T)
    return OnsagerClosure(L, np.diag(L) / rho_i, S)


def maxwell_stefan_closure(f, state: Optional[MixtureState] = None,
                           validate: bool = True) -> MaxwellStefanClosure:
    f = friction_table(f)
    closure = MaxwellStefanClosure(f)
    if validate and state is not None:
        cert = psd_on_subspace(closure.tau(state), np.ones(state.n_species))
        if not cert.ok:
            raise NotSymmetric(f"tau is indefinite on e-perp (min eig {cert.min_eig:.3e})")
    return closure


def novel_closure(d, K=None, state: Optional[MixtureState] = None,
                  validate: bool = True) -> NovelClosure:
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    K = np.zeros((n, n)) if K is None else np.asarray(K, dtype=float)
    if K.shape != (n, n):
        raise DimensionMismatch("K must be N x N")
    closure = NovelClosure(d, K)
    if validate:
        # K enters next to diag(d), so rounding noise in K is judged against both
        scale = max(np.linalg.norm(K), np.linalg.norm(d), np.finfo(float).tiny)
        if np.max(np.abs(K - K.T)) > CLOSURE_TOL * scale or np.any(np.diag(K) != 0):
            raise NotSymmetric("K must be symmetric with zero diagonal")
        if np.linalg.norm(K @ np.ones(n)) > 1e-12 * scale:
            raise KernelMismatch("K must satisfy K e = 0")
        if state is not None:
            cert = psd_on_subspace(closure.D_matrix(state), np.sqrt(state.x))
            if not cert.ok:
                raise NotSymmetric(f"D is indefinite on sqrt(x)-perp (min eig {cert.min_eig:.3e})")
    return closure


def _friction_of(f_or_closure):
    if isinstance(f_or_closure, MaxwellStefanClosure):
        return f_or_closure.f
    return friction_table(f_or_closure)


def ms_group_inverse(state: MixtureState, f) -> GroupInverseResult:
    """B# for the Maxwell-Stefan matrix; right kernel y, left kernel e."""
    state.require_strict()
    B = ms_matrix(state.y, _friction_of(f))
    return group_inverse(rank_deficient(B, state.y, np.ones(state.n_species)))


def ms_onsager(state: MixtureState, f) -> np.ndarray:
    """L = B# R, the Onsager matrix equivalent to a friction table."""
    return ms_group_inverse(state, f).Asharp * state.partial_densities[None, :]


def flux_FO(onsager, grad_mu) -> np.ndarray:
    L = onsager.L if isinstance(onsager, OnsagerClosure) else np.asarray(onsager, dtype=float)
    return -L @ as_gradient(grad_mu, L.shape[0])


def flux_MS(state: MixtureState, f, grad_mu) -> np.ndarray:
    """Solve the Maxwell-Stefan balance -B J = R P grad via J = -B# R grad."""
    g = as_gradient(grad_mu, state.n_species)
    Bsharp = ms_group_inverse(state, f).Asharp
    rho_i = state.partial_densities
    rg = rho_i * g if g.ndim == 1 else rho_i[:, None] * g
    return -Bsharp @ rg


def novel_onsager_matrix(state: MixtureState, novel: NovelClosure) -> np.ndarray:
    state.require_strict()
    return novel_onsager(state.rho, state.y, state.M, novel.d, novel.K)


def flux_novel(state: MixtureState, novel: NovelClosure, grad_mu) -> np.ndarray:
    g = as_gradient(grad_mu, state.n_species)
    return -novel_onsager_matrix(state, novel) @ g


def entropy_production_diff(state: MixtureState, J, grad_mu) -> float:
    """zeta_DIFF / R per unit volume: -sum_i <j_i, grad(mu_i/RT)>."""
    g = as_gradient(grad_mu, state.n_species)
    return -float(np.sum(np.asarray(J, dtype=float) * g))
