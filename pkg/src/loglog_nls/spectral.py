"""Radial grid, weighted quadrature, Laplacian eigenbasis, free flow and D^s.

The radius is mapped to x = 2 r^2 / R^2 - 1 on [-1, 1]. Radial integrals
int_0^R f r^{n-1} dr become a constant times int f (1+x)^{n/2-1} dx, so the
nodes are Gauss-Jacobi(0, n/2-1) points and the lumped mass matrix is the
matching Christoffel weights. Fields vanish at x = 1 (Dirichlet wall) and are
spanned by (1-x) times polynomials of degree < N.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, eigh
from scipy.special import gammaln, roots_jacobi

from .core import ModelParams

TAIL_FRACTION_LIMIT = 1e-8
TAIL_REGION = 0.9


class GridMismatchError(ValueError):
    pass


class TailMassWarning(UserWarning):
    """Field has non-negligible mass near the wall; free-space comparisons degrade."""


# --- orthonormal Jacobi polynomials ------------------------------------------


def _jacobi_recurrence(alpha: float, beta: float, N: int):
    m = np.arange(N, dtype=float)
    ab = alpha + beta
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (beta**2 - alpha**2) / ((2 * m + ab) * (2 * m + ab + 2))
    a[0] = (beta - alpha) / (ab + 2)
    mm = np.arange(1, N + 1, dtype=float)
    b = np.zeros(N + 1)
    b[1:] = np.sqrt(
        4 * mm * (mm + alpha) * (mm + beta) * (mm + ab)
        / ((2 * mm + ab) ** 2 * (2 * mm + ab + 1) * (2 * mm + ab - 1))
    )
    return a, b


def jacobi_orthonormal(x, alpha: float, beta: float, N: int):
    """Values and x-derivatives of the first N orthonormal Jacobi polynomials at x."""
    x = np.asarray(x, dtype=float)
    a, b = _jacobi_recurrence(alpha, beta, N)
    log_mu0 = (alpha + beta + 1) * math.log(2.0) + gammaln(alpha + 1) + gammaln(beta + 1) - gammaln(alpha + beta + 2)
    P = np.zeros((x.size, N))
    dP = np.zeros((x.size, N))
    P[:, 0] = math.exp(-0.5 * log_mu0)
    if N > 1:
        P[:, 1] = (x - a[0]) * P[:, 0] / b[1]
        dP[:, 1] = P[:, 0] / b[1]
    for m in range(1, N - 1):
        P[:, m + 1] = ((x - a[m]) * P[:, m] - b[m] * P[:, m - 1]) / b[m + 1]
        dP[:, m + 1] = (P[:, m] + (x - a[m]) * dP[:, m] - b[m] * dP[:, m - 1]) / b[m + 1]
    return P, dP


def sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2) / math.exp(gammaln(n / 2))


def ball_volume(n: int, R: float) -> float:
    return sphere_area(n) * R**n / n


# --- grid and fields ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridSpec:
    n: int
    N: int
    R_max: float
    nodes: np.ndarray
    weights: np.ndarray
    x: np.ndarray
    christoffel: np.ndarray

    @property
    def beta(self) -> float:
        return self.n / 2 - 1

    @property
    def measure_scale(self) -> float:
        """Constant c with r^{n-1} dr dS = c (1+x)^beta dx."""
        R = self.R_max
        return sphere_area(self.n) * (R * R / 2) ** self.beta * (R * R / 4)

    def key(self) -> tuple:
        return (self.n, self.N, float(self.R_max))

    def same_as(self, other: "GridSpec") -> bool:
        return self is other or self.key() == other.key()


def make_grid(n: int, N: int, R_max: float) -> GridSpec:
    if n not in (3, 4):
        raise ValueError(f"spectral: dimension n must be 3 or 4 (got {n!r})")
    if int(N) != N or N < 8:
        raise ValueError(f"spectral: need an integer N >= 8 nodes (got {N!r})")
    if not (math.isfinite(R_max) and R_max > 0):
        raise ValueError(f"spectral: R_max must be positive (got {R_max!r})")
    N = int(N)
    beta = n / 2 - 1
    x, _ = roots_jacobi(N, 0.0, beta)
    P, _ = jacobi_orthonormal(x, 0.0, beta, N)
    omega = 1.0 / np.sum(P * P, axis=1)
    grid = GridSpec(n=n, N=N, R_max=float(R_max), nodes=R_max * np.sqrt((1 + x) / 2),
                    weights=np.empty(0), x=x, christoffel=omega)
    object.__setattr__(grid, "weights", grid.measure_scale * omega)
    for arr in (grid.nodes, grid.weights, grid.x, grid.christoffel):
        arr.setflags(write=False)
    return grid


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.N,):
            raise ValueError(f"spectral: field has {v.shape} values, grid has N = {self.grid.N}")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectral: field contains NaN or Inf")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: GridSpec, fun) -> "RadialField":
        return cls(grid, np.asarray(fun(grid.nodes), dtype=complex))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "RadialField":
        return cls(grid, np.zeros(grid.N, dtype=complex))

    def conj(self) -> "RadialField":
        return RadialField(self.grid, np.conj(self.values))

    def scaled(self, a: complex) -> "RadialField":
        return RadialField(self.grid, a * self.values)


# --- eigenbasis --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    grid: GridSpec
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    stiffness: np.ndarray

    def check(self, f: RadialField) -> None:
        if not self.grid.same_as(f.grid):
            raise GridMismatchError(f"spectral: field grid {f.grid.key()} differs from basis grid {self.grid.key()}")

    def to_coeffs(self, values: np.ndarray) -> np.ndarray:
        return self.eigenvectors.T @ (self.grid.weights * values)

    def from_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        return self.eigenvectors @ coeffs

    def neg_laplacian(self, values: np.ndarray) -> np.ndarray:
        """Discrete -Delta as W^{-1} K applied to nodal values."""
        return (self.stiffness @ values) / self.grid.weights

    # nodal interpolation helpers

    @cached_property
    def _modal(self):
        g = self.grid
        P, dP = jacobi_orthonormal(g.x, 0.0, g.beta, g.N)
        to_modal = P.T * g.christoffel
        return to_modal, dP @ to_modal

    def dx(self, values: np.ndarray) -> np.ndarray:
        """x-derivative of the polynomial interpolant through the nodes."""
        return self._modal[1] @ values

    def dx_dirichlet(self, values: np.ndarray) -> np.ndarray:
        """x-derivative of the field read as (1-x) times a polynomial."""
        om = 1.0 - self.grid.x
        q = values / om
        return -q + om * self.dx(q)

    def dr(self, values: np.ndarray) -> np.ndarray:
        return self.dx(values) * (4.0 * self.grid.nodes / self.grid.R_max**2)

    def dr_dirichlet(self, values: np.ndarray) -> np.ndarray:
        return self.dx_dirichlet(values) * (4.0 * self.grid.nodes / self.grid.R_max**2)

    def radial_laplacian(self, values: np.ndarray) -> np.ndarray:
        """f_rr + (n-1)/r f_r of the nodal interpolant, computed in x."""
        g = self.grid
        R2 = g.R_max**2
        fx = self.dx(values)
        fxx = self.dx(fx)
        return (8.0 * (1 + g.x) / R2) * fxx + (4.0 * g.n / R2) * fx

    def value_at(self, f: RadialField, r) -> np.ndarray:
        """Spectral interpolation of a field at arbitrary radii in [0, R_max]."""
        self.check(f)
        g = self.grid
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < 0) or np.any(r > g.R_max):
            raise ValueError("spectral: interpolation radius outside [0, R_max]")
        xe = 2.0 * r**2 / g.R_max**2 - 1.0
        a = self._modal[0] @ (f.values / (1.0 - g.x))
        Pe, _ = jacobi_orthonormal(xe, 0.0, g.beta, g.N)
        return (1.0 - xe) * (Pe @ a)


def build_basis(grid: GridSpec) -> SpectralBasis:
    """Symmetric-definite eigendecomposition of the weighted Dirichlet radial Laplacian."""
    n, N, R = grid.n, grid.N, grid.R_max
    beta = grid.beta
    x = grid.x
    # exact stiffness: the integrand is a polynomial of degree 2N in x
    y, wy = roots_jacobi(N + 1, 0.0, beta + 1)
    Py, dPy = jacobi_orthonormal(y, 0.0, beta, N)
    P, _ = jacobi_orthonormal(x, 0.0, beta, N)
    to_modal = P.T * grid.christoffel
    Ly, dLy = Py @ to_modal, dPy @ to_modal
    dphi = (-Ly + (1 - y)[:, None] * dLy) / (1 - x)[None, :]
    K = grid.measure_scale * (8.0 / R**2) * (dphi.T * wy) @ dphi
    K = 0.5 * (K + K.T)
    s = 1.0 / np.sqrt(grid.weights)
    try:
        lam, Q = eigh(s[:, None] * K * s[None, :])
    except LinAlgError as exc:
        raise RuntimeError(f"spectral: eigensolver failed for grid {grid.key()}: {exc}") from exc
    lam = np.maximum(lam, 0.0)
    E = s[:, None] * Q
    for arr in (lam, E, K):
        arr.setflags(write=False)
    return SpectralBasis(grid=grid, eigenvalues=lam, eigenvectors=E, stiffness=K)


# --- operators ---------------------------------------------------------------


def free_propagate(f: RadialField, t: float, basis: SpectralBasis) -> RadialField:
    """e^{it Delta} f: mode j rotates by exp(-i lambda_j t)."""
    basis.check(f)
    if t == 0:
        return RadialField(f.grid, f.values.copy())
    c = basis.to_coeffs(f.values)
    return RadialField(f.grid, basis.from_coeffs(np.exp(-1j * basis.eigenvalues * t) * c))


def frac_deriv(f: RadialField, s: float, basis: SpectralBasis) -> RadialField:
    """D^s f = (-Delta)^{s/2} f."""
    if s < 0:
        raise ValueError(f"spectral: derivative order must be nonnegative (got {s})")
    basis.check(f)
    if s == 0:
        return RadialField(f.grid, f.values.copy())
    c = basis.to_coeffs(f.values)
    return RadialField(f.grid, basis.from_coeffs(basis.eigenvalues ** (s / 2) * c))


def seminorm_from_coeffs(c: np.ndarray, lam: np.ndarray, s: float) -> float:
    return float(np.sqrt(np.sum(lam**s * np.abs(c) ** 2)))


def hk_norm_from_coeffs(c: np.ndarray, lam: np.ndarray, k: float) -> float:
    return seminorm_from_coeffs(c, lam, 1.0) + seminorm_from_coeffs(c, lam, k)


def sobolev_norm(f: RadialField, params: ModelParams, basis: SpectralBasis) -> float:
    """H~^k norm taken as |D^1 f|_2 + |D^k f|_2."""
    basis.check(f)
    return hk_norm_from_coeffs(basis.to_coeffs(f.values), basis.eigenvalues, params.k)


def lebesgue_norm(f: RadialField, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"spectral: Lebesgue exponent must be >= 1 (got {p})")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max())
    return float(np.sum(f.grid.weights * a**p) ** (1.0 / p))


def tail_fraction(f: RadialField, region: float = TAIL_REGION) -> float:
    """L2 mass beyond region*R_max relative to the full L2 norm."""
    w = f.grid.weights
    a2 = np.abs(f.values) ** 2
    total = np.sum(w * a2)
    if total == 0:
        return 0.0
    mask = f.grid.nodes >= region * f.grid.R_max
    return float(np.sqrt(np.sum(w[mask] * a2[mask]) / total))


def warn_if_tail(f: RadialField, what: str) -> float:
    frac = tail_fraction(f)
    if frac > TAIL_FRACTION_LIMIT:
        warnings.warn(f"{what}: tail mass fraction {frac:.3g} exceeds {TAIL_FRACTION_LIMIT:g}",
                      TailMassWarning, stacklevel=3)
    return frac


def conjugate_exponent(p: float) -> float:
    if math.isinf(p):
        return 1.0
    if p == 1:
        return math.inf
    return p / (p - 1.0)


@dataclass(frozen=True)
class DispersiveReport:
    p: float
    times: np.ndarray
    ratios: np.ndarray
    tail_fraction: float

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max())


def dispersive_check(f: RadialField, p: float, times, basis: SpectralBasis) -> DispersiveReport:
    """rho(t) = |e^{it Delta} f|_p |t|^{n(1/2-1/p)} / |f|_{p'} for each t."""
    if not p >= 2:
        raise ValueError(f"spectral: dispersive exponent must be >= 2 (got {p})")
    basis.check(f)
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("spectral: no times given")
    if p > 2 and np.any(times == 0):
        raise ValueError("spectral: t = 0 is singular for p > 2")
    frac = warn_if_tail(f, "dispersive_check")
    expo = f.grid.n * (0.5 - (0.0 if math.isinf(p) else 1.0 / p))
    denom = lebesgue_norm(f, conjugate_exponent(p))
    if denom == 0:
        raise ValueError("spectral: zero field")
    c = basis.to_coeffs(f.values)
    ratios = np.empty(times.size)
    for i, t in enumerate(times):
        u = RadialField(f.grid, basis.from_coeffs(np.exp(-1j * basis.eigenvalues * t) * c))
        ratios[i] = lebesgue_norm(u, p) * abs(t) ** expo / denom
    return DispersiveReport(p=p, times=times, ratios=ratios, tail_fraction=frac)
