"""Equivalence maps between the three closure forms and ellipticity checks.

The cycle implemented here is

    Onsager (A)  ->  projected diagonal (C)  ->  Maxwell-Stefan (B)  ->  Onsager (A)

Each map returns a :class:`Conversion` carrying the new closure together with
the relative flux mismatch measured on the unit gradient probes, so that any
loss of accuracy is visible to the caller.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.linalg import eigh

from .closures import (
    MaxwellStefanClosure,
    NovelClosure,
    OnsagerClosure,
    _offdiag,
    ms_group_inverse,
    ms_matrix,
    novel_onsager_matrix,
    structure_from_onsager,
)
from .errors import BinaryMixture, DimensionMismatch, MissingStructure
from .groupinv import group_inverse, orthonormal_complement, psd_on_subspace, rank_deficient
from .mixture import MixtureState, projection

Closure = Union[OnsagerClosure, MaxwellStefanClosure, NovelClosure]

CERT_TOL = 1e-9


@dataclass(frozen=True)
class Conversion:
    closure: Closure
    residual: float


def onsager_matrix(state: MixtureState, closure: Closure) -> np.ndarray:
    """Onsager matrix L such that J = -L grad(mu/RT) for any closure form."""
    if isinstance(closure, OnsagerClosure):
        return np.asarray(closure.L, dtype=float)
    if isinstance(closure, MaxwellStefanClosure):
        return ms_group_inverse(state, closure).Asharp * state.partial_densities[None, :]
    if isinstance(closure, NovelClosure):
        return novel_onsager_matrix(state, closure)
    raise TypeError(f"unsupported closure type {type(closure).__name__}")


def form_of(closure: Closure) -> str:
    if isinstance(closure, OnsagerClosure):
        return "A"
    if isinstance(closure, MaxwellStefanClosure):
        return "B"
    if isinstance(closure, NovelClosure):
        return "C"
    raise TypeError(f"unsupported closure type {type(closure).__name__}")


def flux_residual(L_ref, L_new, probes=None) -> float:
    """Max relative flux mismatch over gradient probes (unit vectors by default)."""
    L_ref = np.asarray(L_ref, dtype=float)
    if probes is None:
        probes = np.eye(L_ref.shape[0])
    J_ref = -L_ref @ probes
    J_new = -np.asarray(L_new, dtype=float) @ probes
    scale = np.max(np.linalg.norm(J_ref, axis=0))
    if scale == 0.0:
        return float(np.max(np.linalg.norm(J_new, axis=0)))
    return float(np.max(np.linalg.norm(J_new - J_ref, axis=0)) / scale)


def zero_rowsum_shift_vector(K_off) -> np.ndarray:
    """a = -(I - e e^T / (2(N-1))) K_off e / (N-2)."""
    K_off = np.asarray(K_off, dtype=float)
    n = K_off.shape[-1]
    if n < 3:
        raise BinaryMixture("the shift vector needs N >= 3")
    row = K_off.sum(axis=-1)
    return -(row - row.sum(axis=-1, keepdims=True) / (2.0 * (n - 1))) / (n - 2)


def offdiag_zero_rowsum_shift(Ktilde):
    """Shift a symmetric matrix by a e^T + e a^T so its off-diagonal part has zero row sums.

    Returns
    -------
    K : ndarray
        Off-diagonal part of the shifted matrix; ``K @ e == 0``.
    diag_increment : ndarray
        Diagonal of the shifted matrix, to be absorbed into the diagonal part
        of the closure. Adding ``a e^T + e a^T`` leaves P^T Y (.) P^T unchanged.
    """
    Ktilde = np.asarray(Ktilde, dtype=float)
    if Ktilde.ndim != 2 or Ktilde.shape[0] != Ktilde.shape[1]:
        raise DimensionMismatch("Ktilde must be square")
    a = zero_rowsum_shift_vector(_offdiag(Ktilde))
    shifted = Ktilde + a[:, None] + a[None, :]
    K = _offdiag(shifted)
    return 0.5 * (K + K.T), np.diag(shifted).copy()


def _require_structure(state, onsager):
    if isinstance(onsager, OnsagerClosure) and onsager.has_structure:
        return onsager
    raise MissingStructure("Onsager closure carries no (A, S) decomposition")


def fo_to_novel(state: MixtureState, onsager: OnsagerClosure) -> Conversion:
    """(A) -> (C) for N >= 3 using the (A, S) decomposition of L."""
    if state.n_species == 2:
        raise BinaryMixture("use fo_to_novel_binary for two species")
    onsager = _require_structure(state, onsager)
    state.require_strict()
    c_over_rho = state.concentration / state.rho
    K_off, increment = offdiag_zero_rowsum_shift(onsager.S_off)
    d = onsager.A_diag / state.M + c_over_rho * increment * state.x
    novel = NovelClosure(d, c_over_rho * K_off)
    return Conversion(novel, flux_residual(onsager.L, novel_onsager_matrix(state, novel)))


def fo_to_novel_binary(state: MixtureState, onsager: OnsagerClosure) -> Conversion:
    """(A) -> (C) for two species.

    A binary L has a single independent entry, so only one combination of
    (d_1, d_2) is determined. Both diffusivities are set equal; K = 0.
    """
    if state.n_species != 2:
        raise DimensionMismatch("binary conversion needs exactly two species")
    state.require_strict()
    L = np.asarray(onsager.L if isinstance(onsager, OnsagerClosure) else onsager, dtype=float)
    y1, y2 = state.y
    m1, m2 = state.M
    d_bar = L[0, 0] / (state.rho * y1 * y2 * (m1 * y2 + m2 * y1))
    novel = NovelClosure(np.full(2, d_bar), np.zeros((2, 2)))
    return Conversion(novel, flux_residual(L, novel_onsager_matrix(state, novel)))


def shifted_D(state: MixtureState, novel: NovelClosure) -> np.ndarray:
    """D0 = D + b s^T + s b^T with s = sqrt(x), chosen so that D0 s = 0."""
    s = np.sqrt(state.require_strict().x)
    D = novel.D_matrix(state)
    Ds = D @ s
    b = -Ds + 0.5 * float(Ds @ s) * s
    return D + np.outer(b, s) + np.outer(s, b)


def novel_to_ms(state: MixtureState, novel: NovelClosure) -> Conversion:
    """(C) -> (B): B = X^(1/2) D0# X^(-1/2) M^-1, f_ik = -B_ik / y_i."""
    s = np.sqrt(state.require_strict().x)
    D0 = shifted_D(state, novel)
    D0_sharp = group_inverse(rank_deficient(D0, s, s)).Asharp
    B = (s[:, None] * D0_sharp / s[None, :]) / state.M[None, :]
    f = _offdiag(-B / state.y[:, None])
    msc = MaxwellStefanClosure(0.5 * (f + f.T))
    L_ref = novel_onsager_matrix(state, novel)
    return Conversion(msc, flux_residual(L_ref, onsager_matrix(state, msc)))


def default_self_friction(B, M, d0: Optional[float] = None) -> float:
    """Diagonal friction used to extend f to a full matrix F."""
    if d0 is not None:
        return float(d0) / float(np.max(M))
    diag = np.diag(B)
    positive = diag[diag > 0]
    return max(1e-6, float(positive.min())) if positive.size else 1e-6


def ms_to_fo(state: MixtureState, msc: MaxwellStefanClosure, d0: Optional[float] = None) -> Conversion:
    """(B) -> (A): L = B# R with its (A, S) decomposition.

    The friction table is completed with a positive diagonal, F = f + f_self I,
    so that A~ = diag(F y)^-1 and S~ = diag(F y)^-1 (F B# - e e^T) satisfy
    L = R (A~ + S~ Y). The diagonal of S~ is then moved into A.
    """
    state.require_strict()
    f = np.asarray(msc.f, dtype=float)
    y = state.y
    B = ms_matrix(y, f)
    B_sharp = ms_group_inverse(state, msc).Asharp
    rho_i = state.partial_densities
    L = B_sharp * rho_i[None, :]
    L = 0.5 * (L + L.T)
    F = f + default_self_friction(B, state.M, d0) * np.eye(state.n_species)
    a_tilde = 1.0 / (F @ y)
    S_tilde = a_tilde[:, None] * (F @ B_sharp - 1.0)
    A_diag = a_tilde + np.diag(S_tilde) * y
    S = _offdiag(S_tilde)
    S = 0.5 * (S + S.T)
    rebuilt = rho_i[:, None] * (np.diag(A_diag) + S * y[None, :])
    return Conversion(OnsagerClosure(L, A_diag, S), flux_residual(L, rebuilt))


def fo_to_ms(state: MixtureState, onsager: OnsagerClosure) -> Conversion:
    """(A) -> (B) through (C)."""
    mid = to_novel(state, onsager)
    out = novel_to_ms(state, mid.closure)
    return Conversion(out.closure, flux_residual(onsager.L, onsager_matrix(state, out.closure)))


def to_novel(state: MixtureState, onsager: OnsagerClosure) -> Conversion:
    """(A) -> (C), dispatching on the number of species and filling in structure."""
    if state.n_species == 2:
        return fo_to_novel_binary(state, onsager)
    if not onsager.has_structure:
        onsager = structure_from_onsager(state, onsager.L)
    return fo_to_novel(state, onsager)


def convert(state: MixtureState, closure: Closure, target: str,
            d0: Optional[float] = None) -> Conversion:
    """Convert any closure to form ``target`` in {"A", "B", "C"}."""
    target = target.upper()
    if target not in ("A", "B", "C"):
        raise DimensionMismatch(f"unknown target form {target!r}")
    source = form_of(closure)
    L_ref = onsager_matrix(state, closure)
    if source == target:
        out = closure
    elif target == "A":
        if source == "B":
            out = ms_to_fo(state, closure, d0).closure
        else:
            out = structure_from_onsager(state, L_ref)
    elif target == "C":
        onsager = closure if source == "A" else ms_to_fo(state, closure, d0).closure
        out = to_novel(state, onsager).closure
    else:
        novel = closure if source == "C" else to_novel(state, closure).closure
        out = novel_to_ms(state, novel).closure
    return Conversion(out, flux_residual(L_ref, onsager_matrix(state, out)))


@dataclass(frozen=True)
class EllipticityCertificate:
    d0: float
    form: str
    min_excess_eig: float
    ok: bool


def _ellipticity_pair(state: MixtureState, closure: Closure):
    """(closure matrix, reference matrix, kernel direction, form label)."""
    n = state.n_species
    e = np.ones(n)
    P = projection(state.y)
    if isinstance(closure, OnsagerClosure):
        weight = state.M * state.partial_densities
        return np.asarray(closure.L, dtype=float), P.T @ (weight[:, None] * P), e, "i"
    if isinstance(closure, MaxwellStefanClosure):
        BY = ms_matrix(state.y, closure.f) * state.y[None, :]
        weight = state.y / state.M
        return 0.5 * (BY + BY.T), P.T @ (weight[:, None] * P), e, "ii"
    if isinstance(closure, NovelClosure):
        return closure.D_matrix(state), np.eye(n), np.sqrt(state.x), "iii"
    raise TypeError(f"unsupported closure type {type(closure).__name__}")


def ellipticity_certificate(state: MixtureState, closure: Closure, d0: float) -> EllipticityCertificate:
    """Check the lower bound matching the closure's form.

    Form (A): L >= d0 P^T M R P on e-perp.
    Form (B): B Y >= d0 P^T M^-1 Y P on e-perp.
    Form (C): D + X^(1/2) K X^(1/2) >= d0 I on sqrt(x)-perp.
    """
    state.require_strict()
    mat, ref, kernel, form = _ellipticity_pair(state, closure)
    slack = mat - d0 * ref
    Q = orthonormal_complement(kernel)
    min_eig = float(np.linalg.eigvalsh(Q.T @ (0.5 * (slack + slack.T)) @ Q)[0])
    norm = max(np.linalg.norm(mat, 2), abs(d0) * np.linalg.norm(ref, 2))
    return EllipticityCertificate(float(d0), form, min_eig, bool(min_eig >= -CERT_TOL * norm))


def max_ellipticity_constant(state: MixtureState, closure: Closure) -> float:
    """Largest d0 for which :func:`ellipticity_certificate` holds with zero slack."""
    state.require_strict()
    mat, ref, kernel, _ = _ellipticity_pair(state, closure)
    Q = orthonormal_complement(kernel)
    lhs = Q.T @ (0.5 * (mat + mat.T)) @ Q
    rhs = Q.T @ (0.5 * (ref + ref.T)) @ Q
    return float(eigh(lhs, rhs, eigvals_only=True)[0])


def friction_ellipticity_constant(f, M) -> float:
    """1 / (sup |f_ik| * max M): lower bound for form (A) induced by positive f."""
    return 1.0 / (float(np.max(np.abs(_offdiag(f)))) * float(np.max(M)))


def tau_is_psd(state: MixtureState, msc: MaxwellStefanClosure) -> bool:
    return psd_on_subspace(msc.tau(state), np.ones(state.n_species)).ok
