"""Empirical constants for the fractional Leibniz rule on a periodic 1-D grid.

For a case (alpha, k, beta, r, r1, r2, r3, F, G) the ratio

    |D^{k-1+alpha}(G(f) F(|f|))|_r / (|f|_{r1}^beta |D^{k-1+alpha} f|_{r2} |F(|f|)|_{r3})

is evaluated with Fourier multipliers and periodic quadrature.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .core import ModelParams, g_eval

CUSP_DELTA = 1e-8
HOLDER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PeriodicField:
    values: np.ndarray
    period: float = 2 * math.pi

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex)
        N = v.size
        if v.ndim != 1 or N < 64 or N & (N - 1):
            raise ValueError(f"leibniz: N must be a power of two >= 64 (got {N})")
        if not np.all(np.isfinite(v)):
            raise ValueError("leibniz: field contains NaN or Inf")
        if not self.period > 0:
            raise ValueError("leibniz: period must be positive")
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * (self.period / self.N)


def _wavenumbers(N: int, period: float) -> np.ndarray:
    return 2 * np.pi * np.fft.fftfreq(N, d=1.0 / N) / period


def periodic_frac_deriv(f: PeriodicField, s: float) -> PeriodicField:
    """|xi|^s multiplier; the zero mode is removed for s > 0."""
    if s < 0:
        raise ValueError(f"leibniz: derivative order must be nonnegative (got {s})")
    if s == 0:
        return PeriodicField(f.values.copy(), f.period)
    xi = np.abs(_wavenumbers(f.N, f.period))
    return PeriodicField(np.fft.ifft(xi**s * np.fft.fft(f.values)), f.period)


def periodic_norm(values: np.ndarray, p: float, period: float) -> float:
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * (period / a.size)) ** (1.0 / p))


# --- catalogue ---------------------------------------------------------------


def _smooth_abs(z: np.ndarray) -> np.ndarray:
    return np.sqrt(np.abs(z) ** 2 + CUSP_DELTA**2)


def G_power_times_z(z, beta):
    """|z|^beta z."""
    return _smooth_abs(z) ** beta * z


def G_power_times_z2(z, beta):
    """|z|^{beta-1} z^2."""
    return _smooth_abs(z) ** (beta - 1) * z * z


def G_square(z, beta):
    return z * z


G_CATALOGUE = {"abs_pow_z": G_power_times_z, "abs_pow_z2": G_power_times_z2, "z2": G_square}
F_CATALOGUE = ("g", "one")


@dataclass(frozen=True)
class LeibnizCase:
    case_id: str
    alpha: float
    k_order: int
    beta: float
    r: float
    r1: float
    r2: float
    r3: float
    F: str = "g"
    G: str = "abs_pow_z"

    def __post_init__(self) -> None:
        if not 0 <= self.alpha <= 1:
            raise ValueError("leibniz: alpha must lie in [0, 1]")
        if int(self.k_order) != self.k_order or self.k_order < 2:
            raise ValueError("leibniz: k must be an integer >= 2")
        if self.beta < self.k_order - 1:
            raise ValueError("leibniz: need beta >= k - 1")
        for name in ("r", "r1", "r2"):
            v = getattr(self, name)
            if not (1 < v < math.inf):
                raise ValueError(f"leibniz: exponent {name} must lie in (1, inf)")
        if not self.r3 > 1:
            raise ValueError("leibniz: exponent r3 must lie in (1, inf]")
        lhs = 1.0 / self.r
        rhs = self.beta / self.r1 + 1.0 / self.r2 + (0.0 if math.isinf(self.r3) else 1.0 / self.r3)
        if abs(lhs - rhs) > HOLDER_TOL:
            raise ValueError(f"leibniz: exponents violate 1/r = beta/r1 + 1/r2 + 1/r3 ({lhs!r} vs {rhs!r})")
        if self.F not in F_CATALOGUE or self.G not in G_CATALOGUE:
            raise ValueError(f"leibniz: unknown catalogue entry F={self.F!r} G={self.G!r}")

    @property
    def order(self) -> float:
        return self.k_order - 1 + self.alpha


def _case(cid, alpha, k, beta, r1, r2, r3, F, G) -> LeibnizCase:
    inv = beta / r1 + 1.0 / r2 + (0.0 if math.isinf(r3) else 1.0 / r3)
    return LeibnizCase(cid, alpha, k, beta, 1.0 / inv, r1, r2, r3, F, G)


def catalogue() -> list[LeibnizCase]:
    """The six standard cases (r2 = 2 throughout)."""
    inf = math.inf
    return [
        _case("A", 0.0, 2, 1.0, 4.0, 2.0, inf, "g", "abs_pow_z"),
        _case("B", 0.5, 2, 1.5, 6.0, 2.0, inf, "g", "abs_pow_z2"),
        _case("C", 1.0, 2, 2.0, 8.0, 2.0, inf, "g", "abs_pow_z"),
        _case("D", 0.25, 3, 2.0, 8.0, 2.0, 8.0, "g", "abs_pow_z"),
        _case("E", 0.5, 2, 1.0, 4.0, 2.0, inf, "one", "z2"),
        _case("F", 0.75, 3, 3.0, 12.0, 2.0, inf, "g", "abs_pow_z2"),
    ]


DEFAULT_F_PARAMS = ModelParams(n=3, c=1e-4)


def _F_values(name: str, a: np.ndarray, params: ModelParams) -> np.ndarray:
    if name == "one":
        return np.ones_like(a)
    return np.asarray(g_eval(a, params))


def leibniz_ratio(case: LeibnizCase, f: PeriodicField, params: ModelParams = DEFAULT_F_PARAMS) -> float:
    u = f.values
    a = np.abs(u)
    Fa = _F_values(case.F, a, params)
    prod = PeriodicField(G_CATALOGUE[case.G](u, case.beta) * Fa, f.period)
    lhs = periodic_norm(periodic_frac_deriv(prod, case.order).values, case.r, f.period)
    rhs = (periodic_norm(u, case.r1, f.period) ** case.beta
           * periodic_norm(periodic_frac_deriv(f, case.order).values, case.r2, f.period)
           * periodic_norm(Fa, case.r3, f.period))
    if not (rhs > 0 and math.isfinite(rhs)):
        raise FloatingPointError("leibniz: right-hand side underflowed; field too small")
    return lhs / rhs


# --- random fields and the survey -------------------------------------------


def random_modes(rng: np.random.Generator, band: int = 6) -> dict[int, complex]:
    """Complex Fourier amplitudes on |m| <= band with mild decay, independent of N."""
    ms = np.arange(-band, band + 1)
    amp = (rng.standard_normal(ms.size) + 1j * rng.standard_normal(ms.size)) / (1.0 + np.abs(ms))
    return {int(m): complex(c) for m, c in zip(ms, amp)}


def field_from_modes(modes: dict[int, complex], N: int, period: float = 2 * math.pi) -> PeriodicField:
    x = np.arange(N) * (period / N)
    v = np.zeros(N, dtype=complex)
    for m, c in modes.items():
        v += c * np.exp(2j * np.pi * m * x / period)
    return PeriodicField(v, period)


@dataclass(frozen=True)
class SurveyRow:
    case: LeibnizCase
    max_ratio: float
    median_ratio: float
    argmax_sample: int
    argmax_signature: tuple[tuple[int, float], ...]


def constant_survey(cases, samples: int, seed: int, N: int = 256, band: int = 6,
                    params: ModelParams = DEFAULT_F_PARAMS) -> list[SurveyRow]:
    """Max and median ratios per case over `samples` random band-limited fields.

    Sample i of every case uses the i-th child of SeedSequence(seed), so the
    table depends only on (seed, samples, band) and is reproducible.
    """
    if samples < 1:
        raise ValueError("leibniz: need at least one sample")
    cases = list(cases)
    if not cases:
        return []
    children = np.random.SeedSequence(seed).spawn(samples)
    mode_sets = [random_modes(np.random.default_rng(ch), band) for ch in children]
    fields = [field_from_modes(m, N) for m in mode_sets]
    rows = []
    for case in cases:
        ratios = np.array([leibniz_ratio(case, f, params) for f in fields])
        j = int(np.argmax(ratios))
        sig = tuple(sorted(((m, round(abs(c), 12)) for m, c in mode_sets[j].items()), key=lambda t: -t[1])[:3])
        rows.append(SurveyRow(case, float(ratios.max()), float(np.median(ratios)), j, sig))
    return rows


def survey_csv(rows: list[SurveyRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "alpha", "k", "beta", "r", "r1", "r2", "r3", "max_ratio", "median_ratio"])
    for row in rows:
        c = row.case
        w.writerow([c.case_id] + [f"{v:.17g}" for v in (c.alpha, c.k_order, c.beta, c.r, c.r1, c.r2, c.r3,
                                                        row.max_ratio, row.median_ratio)])
    return buf.getvalue()
