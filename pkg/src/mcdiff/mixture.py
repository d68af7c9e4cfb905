"""Mixture state, derived matrices, ideal chemical potential gradients.

Conventions
-----------
Species vectors have shape ``(N,)``. Per-species gradient fields have shape
``(N,)`` for a single spatial component or ``(N, dim)`` for ``dim`` spatial
components; every matrix acts on axis 0, one spatial column at a time.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    FractionSumOutOfRange,
    NegativeFraction,
    NonPositiveDensity,
    NonPositiveTemperature,
    ZeroFraction,
)

GAS_CONSTANT = 8.31446261815324  # J/(mol K)
FRACTION_SUM_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MixtureState:
    """Thermodynamic state of an N-species mixture.

    Attributes
    ----------
    T : float
        Temperature in K.
    rho : float
        Total mass density in kg/m^3.
    M : ndarray
        Molar masses in kg/mol.
    y : ndarray
        Mass fractions, normalized to sum to one.
    """

    T: float
    rho: float
    M: np.ndarray = field(repr=False)
    y: np.ndarray

    @property
    def n_species(self) -> int:
        return self.y.shape[0]

    @property
    def partial_densities(self) -> np.ndarray:
        return self.rho * self.y

    @property
    def concentration(self) -> float:
        """Total molar concentration c in mol/m^3."""
        return float(np.sum(self.rho * self.y / self.M))

    @property
    def x(self) -> np.ndarray:
        n = self.rho * self.y / self.M
        return n / np.sum(n)

    @property
    def is_strict(self) -> bool:
        return bool(np.all(self.y > 0.0))

    def require_strict(self):
        if not self.is_strict:
            raise ZeroFraction("operation requires all mass fractions to be positive")
        return self

    def with_fractions(self, y) -> "MixtureState":
        return make_state(self.T, self.rho, self.M, y)


def make_state(T, rho, M, y_raw) -> MixtureState:
    """Validate inputs and build a normalized :class:`MixtureState`.

    Fraction vectors whose sum is within 1e-9 of one are rescaled to sum to
    one; anything further off is rejected.
    """
    if not np.isfinite(T) or T <= 0:
        raise NonPositiveTemperature(f"temperature must be positive, got {T!r}")
    if not np.isfinite(rho) or rho <= 0:
        raise NonPositiveDensity(f"density must be positive, got {rho!r}")
    M = np.asarray(M, dtype=float)
    y = np.asarray(y_raw, dtype=float)
    if M.ndim != 1 or y.ndim != 1 or M.shape != y.shape:
        raise DimensionMismatch("M and y must be vectors of equal length")
    if y.shape[0] < 2:
        raise DimensionMismatch("a mixture needs at least two species")
    if not np.all(np.isfinite(M)) or np.any(M <= 0):
        raise DimensionMismatch("molar masses must be finite and positive")
    if not np.all(np.isfinite(y)):
        raise NegativeFraction("mass fractions must be finite")
    if np.any(y < 0):
        raise NegativeFraction(f"negative mass fraction in {y.tolist()}")
    total = float(np.sum(y))
    if abs(total - 1.0) > FRACTION_SUM_TOL:
        raise FractionSumOutOfRange(f"mass fractions sum to {total!r}")
    return MixtureState(float(T), float(rho), _frozen(M), _frozen(y / total))


def projection(y):
    """Return P = I - e (x) y, i.e. ``P[i, j] = delta_ij - y_j``.

    Accepts a batch of fraction vectors with shape ``(..., N)``.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    return np.eye(n) - y[..., None, :]


def projection_t(y):
    """Return P^T = I - y (x) e."""
    return np.swapaxes(projection(y), -1, -2)


@dataclass(frozen=True)
class DerivedMatrices:
    R: np.ndarray
    Y: np.ndarray
    x: np.ndarray
    X: np.ndarray
    c: float
    P: np.ndarray
    Pt: np.ndarray
    Pmol: np.ndarray


def derived(state: MixtureState) -> DerivedMatrices:
    """Diagonal matrices, molar fractions and projections of ``state``."""
    rho_i = state.partial_densities
    x = state.x
    P = projection(state.y)
    Pmol = (state.M[:, None] * P) / state.M[None, :]
    return DerivedMatrices(
        R=_frozen(np.diag(rho_i)),
        Y=_frozen(np.diag(state.y)),
        x=_frozen(x),
        X=_frozen(np.diag(x)),
        c=state.concentration,
        P=_frozen(P),
        Pt=_frozen(P.T),
        Pmol=_frozen(Pmol),
    )


def sqrt_x(state: MixtureState) -> np.ndarray:
    """sqrt(x), refusing states with a vanishing species."""
    state.require_strict()
    return np.sqrt(state.x)


def inv_sqrt_x(state: MixtureState) -> np.ndarray:
    state.require_strict()
    return 1.0 / np.sqrt(state.x)


def as_gradient(grad, n_species: int) -> np.ndarray:
    g = np.asarray(grad, dtype=float)
    if g.ndim not in (1, 2) or g.shape[0] != n_species:
        raise DimensionMismatch(
            f"gradient must have shape (N,) or (N, dim) with N={n_species}, got {g.shape}"
        )
    if g.ndim == 2 and not 1 <= g.shape[1] <= 3:
        raise DimensionMismatch("spatial dimension must be 1, 2 or 3")
    if not np.all(np.isfinite(g)):
        raise DimensionMismatch("gradient entries must be finite")
    return g


def ideal_mu_gradient(x_field, M, spacing) -> np.ndarray:
    """Gradient of mu_i/(RT) for an ideal isothermal, isobaric mixture.

    With mu_i = g_i(T, p) + RT/M_i ln x_i the gradient reduces to
    (1/M_i) d(ln x_i)/dz.

    Parameters
    ----------
    x_field : array_like, shape (n_nodes, N)
        Molar fractions sampled on a uniform 1-D grid.
    M : array_like, shape (N,)
        Molar masses.
    spacing : float
        Grid spacing.

    Returns
    -------
    ndarray, shape (n_nodes, N)
        Central differences in the interior, one-sided first-order
        differences at the two end nodes.
    """
    x_field = np.asarray(x_field, dtype=float)
    M = np.asarray(M, dtype=float)
    if x_field.ndim != 2 or x_field.shape[1] != M.shape[0]:
        raise DimensionMismatch("x_field must have shape (n_nodes, N)")
    if x_field.shape[0] < 2:
        raise DimensionMismatch("need at least two grid nodes")
    if np.any(x_field <= 0):
        raise ZeroFraction("ln x undefined for a vanishing molar fraction")
    log_x = np.log(x_field)
    grad = np.empty_like(log_x)
    grad[1:-1] = (log_x[2:] - log_x[:-2]) / (2.0 * spacing)
    grad[0] = (log_x[1] - log_x[0]) / spacing
    grad[-1] = (log_x[-1] - log_x[-2]) / spacing
    return grad / M[None, :]


def driving_forces(state: MixtureState, grad_mu) -> np.ndarray:
    """d_i = rho_i (g_i - sum_k y_k g_k) where g = grad(mu/RT); equals R P g."""
    g = as_gradient(grad_mu, state.n_species)
    mean = np.tensordot(state.y, g, axes=(0, 0))
    rho_i = state.partial_densities
    if g.ndim == 1:
        return rho_i * (g - mean)
    return rho_i[:, None] * (g - mean[None, :])
