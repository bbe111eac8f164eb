"""Equation definition: the loglog factor g, the potentials F and F~, and exact constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

SUPPORTED_DIMENSIONS = (3, 4)
QUAD_RTOL = 1e-10
QUAD_ATOL = 1e-30


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


def _check_dimension(n: int) -> None:
    if n not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"core: dimension n must be 3 or 4 (got {n!r})")


def c_n_exact(n: int) -> Fraction:
    """Upper limit for the loglog exponent, as an exact rational."""
    _check_dimension(n)
    if n == 3:
        num = (n - 2) ** 2 * (6 - n)
        den = 2 * n * (4 * n**2 - 15 * n + 22) * (46 * n**2 - 70 * n + 20)
    else:
        num = (n + 2) * (6 - n)
        den = (n**2 + 12 * n + 4) * (44 * n**2 - 62 * n + 12)
    return Fraction(num, den)


def b_n_exact(n: int) -> Fraction:
    """Growth exponent of the long-time bound, from its own closed form."""
    _check_dimension(n)
    if n == 3:
        num = 2 * n * (4 * n**2 - 15 * n + 22) * (46 * n**2 - 70 * n + 20)
        den = (n - 2) ** 2 * (6 - n)
    else:
        num = (n**2 + 12 * n + 4) * (44 * n**2 - 62 * n + 12)
        den = (n + 2) * (6 - n)
    return Fraction(num, den)


def default_k(n: int) -> float:
    _check_dimension(n)
    return 2.0 if n == 3 else 2.5


@dataclass(frozen=True)
class ModelParams:
    """Dimension n, loglog exponent c and Sobolev index k.

    The critical space-time exponent q = 2(n+2)/(n-2) is derived.
    """

    n: int = 3
    c: float = 1e-4
    k: float | None = None
    q: float = field(init=False)

    def __post_init__(self) -> None:
        _check_dimension(self.n)
        cn = c_n_exact(self.n)
        if not (math.isfinite(self.c) and 0.0 < self.c and Fraction(self.c) < cn):
            raise ValueError(
                f"core: loglog exponent must satisfy 0 < c < c_n = {cn} "
                f"(~{float(cn):.6g}) for n = {self.n} (got {self.c!r})"
            )
        k = default_k(self.n) if self.k is None else float(self.k)
        if not (math.isfinite(k) and k > self.n / 2):
            raise ValueError(f"core: Sobolev index must satisfy k > n/2 = {self.n / 2} (got {k!r})")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "q", 2.0 * (self.n + 2) / (self.n - 2))

    @property
    def power(self) -> float:
        """Exponent 4/(n-2) of the energy-critical nonlinearity."""
        return 4.0 / (self.n - 2)

    @property
    def potential_exponent(self) -> float:
        """Exponent 2n/(n-2) in F(s) ~ s^{2n/(n-2)} g(s)."""
        return 2.0 * self.n / (self.n - 2)


@dataclass(frozen=True)
class CriticalConstants:
    n: int
    c_n: Fraction
    b_n: Fraction
    a_n: float = 1.0
    eps: float = 1e-3

    def __post_init__(self) -> None:
        if not (self.c_n > 0 and self.b_n > 0 and self.a_n > 0):
            raise ValueError("core: critical constants must be strictly positive")
        if self.eps < 0:
            raise ValueError("core: epsilon offset on b_n must be nonnegative")

    @property
    def b_plus(self) -> float:
        """b_n + eps, the exponent used in the long-time bound."""
        return float(self.b_n) + self.eps


def critical_constants(n: int, a_n: float = 1.0, eps: float = 1e-3) -> CriticalConstants:
    return CriticalConstants(n=n, c_n=c_n_exact(n), b_n=b_n_exact(n), a_n=float(a_n), eps=float(eps))


# --- the loglog factor -------------------------------------------------------


def g_eval(s, params: ModelParams):
    """g(s) = (log log(10 + s^2))^c, elementwise."""
    s = np.asarray(s, dtype=float)
    out = np.log(np.log(10.0 + s * s)) ** params.c
    return out if out.ndim else float(out)


def g_prime(s, params: ModelParams):
    """Closed-form derivative of g."""
    s = np.asarray(s, dtype=float)
    a = 10.0 + s * s
    L1 = np.log(a)
    L2 = np.log(L1)
    out = params.c * L2 ** (params.c - 1.0) * 2.0 * s / (a * L1)
    return out if out.ndim else float(out)


def g_log_derivative_ratio(s, params: ModelParams):
    """s g'(s) / g(s), which is bounded on (0, inf)."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("core: log-derivative ratio needs s > 0")
    a = 10.0 + s * s
    L1 = np.log(a)
    out = 2.0 * params.c * s * s / (a * L1 * np.log(L1))
    return out if out.ndim else float(out)


# --- potentials --------------------------------------------------------------


def _p(params: ModelParams) -> float:
    return (params.n + 2) / (params.n - 2)


def _F_integrand(t, params):
    return t ** _p(params) * g_eval(t, params)


def _tF_integrand(t, params):
    return t ** _p(params) * (4.0 / (params.n - 2) * g_eval(t, params) + t * g_prime(t, params))


def _adaptive(fun, s: float, params: ModelParams) -> float:
    s = float(s)
    if not (math.isfinite(s) and s >= 0):
        raise ValueError(f"core: amplitude must be finite and nonnegative (got {s!r})")
    if s == 0.0:
        return 0.0
    res = integrate.quad(fun, 0.0, s, args=(params,), epsabs=QUAD_ATOL, epsrel=QUAD_RTOL,
                         limit=200, full_output=1)
    if len(res) == 4:
        raise QuadratureError(f"core: quadrature did not converge at s = {s}: {res[3]}")
    val, err = res[0], res[1]
    if err > max(QUAD_ATOL, 10 * QUAD_RTOL * abs(val)):
        raise QuadratureError(f"core: quadrature error estimate {err:.3g} too large at s = {s}")
    return val


def potential_F(s: float, params: ModelParams) -> float:
    """F(s) = int_0^s t^{(n+2)/(n-2)} g(t) dt by adaptive quadrature."""
    return _adaptive(_F_integrand, s, params)


def tilde_F(s: float, params: ModelParams) -> float:
    """F~(s) = int_0^s t^{(n+2)/(n-2)} (4/(n-2) g(t) + t g'(t)) dt."""
    return _adaptive(_tF_integrand, s, params)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _graded_rule(smax: float):
    """Composite Gauss rule on [0, 1], graded geometrically toward 0.

    The integrands in tau have complex singularities at distance ~3/s from the
    origin, so the panels near 0 shrink with the largest amplitude.
    """
    J = 1 if smax <= 3.0 else min(60, int(math.ceil(math.log2(smax / 3.0))) + 2)
    edges = np.concatenate(([0.0], 2.0 ** -np.arange(J, -1, -1.0)))
    a, b = edges[:-1, None], edges[1:, None]
    tau = (0.5 * (b - a) * _GL_X + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * _GL_W).ravel()
    return tau, w


def _scaled_integral(s, params, kind: str):
    s = np.abs(np.asarray(s, dtype=float))
    flat = s.ravel()
    out = np.zeros_like(flat)
    nz = flat > 0
    if np.any(nz):
        sv = flat[nz]
        tau, w = _graded_rule(float(sv.max()))
        t = sv[:, None] * tau[None, :]
        p = _p(params)
        if kind == "F":
            body = g_eval(t, params)
        else:
            body = 4.0 / (params.n - 2) * g_eval(t, params) + t * g_prime(t, params)
        out[nz] = sv ** (p + 1) * ((tau**p * w)[None, :] * body).sum(axis=1)
    return out.reshape(s.shape)


def potential_F_array(s, params: ModelParams) -> np.ndarray:
    """Vectorized F for arrays of amplitudes (composite Gauss-Legendre)."""
    return _scaled_integral(s, params, "F")


def tilde_F_array(s, params: ModelParams) -> np.ndarray:
    """Vectorized F~ for arrays of amplitudes (composite Gauss-Legendre)."""
    return _scaled_integral(s, params, "tF")
