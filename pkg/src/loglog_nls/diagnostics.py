"""Functionals and inequality checks evaluated on fields and trajectories."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from .bourgain import IntervalFamily
from .core import CriticalConstants, ModelParams, g_eval, potential_F_array, tilde_F_array
from .spectral import (
    RadialField,
    SpectralBasis,
    TAIL_FRACTION_LIMIT,
    TailMassWarning,
    hk_norm_from_coeffs,
    tail_fraction,
)

if TYPE_CHECKING:
    from .evolve import Trajectory


class DegenerateTrajectoryError(ValueError):
    pass


@dataclass(frozen=True)
class CheckResult:
    name: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    bound: float = 1.0
    note: str = ""
    extra: dict = field(default_factory=dict)


def make_check(name: str, lhs: float, rhs: float, bound: float = 1.0, note: str = "", **extra) -> CheckResult:
    """Ratio LHS/RHS; the check passes when the ratio is at most `bound`."""
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0 else math.inf
    return CheckResult(name, float(lhs), float(rhs), float(ratio), bool(ratio <= bound), float(bound), note, extra)


@dataclass
class DiagnosticsReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def extend(self, other: "DiagnosticsReport") -> "DiagnosticsReport":
        self.checks.extend(other.checks)
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "lhs", "rhs", "ratio", "pass", "bound"])
        for c in self.checks:
            w.writerow([c.name, f"{c.lhs:.17g}", f"{c.rhs:.17g}", f"{c.ratio:.17g}",
                        "1" if c.passed else "0", f"{c.bound:.17g}"])
        return buf.getvalue()


# --- single-field functionals ------------------------------------------------


def energy(f: RadialField, params: ModelParams, basis: SpectralBasis) -> float:
    """1/2 |D^1 f|^2 + int F(|f|)."""
    basis.check(f)
    c = basis.to_coeffs(f.values)
    kinetic = 0.5 * float(np.sum(basis.eigenvalues * np.abs(c) ** 2))
    potential = float(np.sum(f.grid.weights * potential_F_array(np.abs(f.values), params)))
    return kinetic + potential


def mass_in_ball(f: RadialField, R: float) -> float:
    g = f.grid
    if not (0 < R <= g.R_max):
        raise ValueError(f"diagnostics: ball radius must lie in (0, R_max = {g.R_max}] (got {R!r})")
    mask = g.nodes <= R
    return float(np.sqrt(np.sum(g.weights[mask] * np.abs(f.values[mask]) ** 2)))


def _grad_norms(traj: "Trajectory", basis: SpectralBasis) -> np.ndarray:
    lam = basis.eigenvalues
    return np.array([np.sqrt(np.sum(lam * np.abs(basis.to_coeffs(v)) ** 2)) for v in traj.values])


def mass_bound_checks(traj: "Trajectory", R: float, basis: SpectralBasis, constant: float = 10.0) -> DiagnosticsReport:
    if len(traj) < 3:
        raise DegenerateTrajectoryError("diagnostics: mass bounds need at least 3 samples")
    masses = np.array([mass_in_ball(traj.field(i), R) for i in range(len(traj))])
    sup_grad = np.maximum.accumulate(_grad_norms(traj, basis))

    r1 = np.where(sup_grad > 0, masses / np.where(sup_grad > 0, R * sup_grad, 1.0), 0.0)
    i1 = int(np.argmax(r1))
    dm = np.abs(np.diff(masses)) / np.diff(traj.times)
    s2 = sup_grad[1:]
    r2 = np.where(s2 > 0, dm * R / np.where(s2 > 0, s2, 1.0), 0.0)
    i2 = int(np.argmax(r2))
    return DiagnosticsReport([
        make_check("mass_control", masses[i1], R * sup_grad[i1], constant,
                   note=f"t={traj.times[i1]:.6g}"),
        make_check("mass_derivative", dm[i2], sup_grad[i2 + 1] / R, constant,
                   note=f"t={traj.times[i2]:.6g}"),
    ])


# --- time quadrature ---------------------------------------------------------


def _cumulative(times: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid integral at the sample times."""
    out = np.zeros_like(times)
    out[1:] = np.cumsum(0.5 * (m[1:] + m[:-1]) * np.diff(times))
    return out


def _cumulative_at(t: float, times: np.ndarray, m: np.ndarray, cum: np.ndarray) -> float:
    """Integral from times[0] to t of the piecewise-linear interpolant of m."""
    if t <= times[0]:
        return 0.0
    if t >= times[-1]:
        return float(cum[-1])
    i = int(np.searchsorted(times, t, side="right")) - 1
    h = t - times[i]
    slope = (m[i + 1] - m[i]) / (times[i + 1] - times[i])
    return float(cum[i] + m[i] * h + 0.5 * slope * h * h)


def _check_window(traj: "Trajectory", J) -> tuple[float, float]:
    t0, t1 = traj.span
    if J is None:
        return t0, t1
    a, b = float(J[0]), float(J[1])
    tol = 1e-12 * max(1.0, abs(t1))
    if not (t0 - tol <= a <= b <= t1 + tol):
        raise ValueError(f"diagnostics: window [{a}, {b}] outside trajectory span [{t0}, {t1}]")
    return max(a, t0), min(b, t1)


def _power_masses(traj: "Trajectory", q: float) -> np.ndarray:
    w = traj.grid.weights
    return np.array([np.sum(w * np.abs(v) ** q) for v in traj.values])


def spacetime_norm(traj: "Trajectory", q: float, J=None) -> float:
    """(int_J |u(t)|_q^q dt)^{1/q}, trapezoidal in time."""
    if not q >= 1:
        raise ValueError(f"diagnostics: exponent must be >= 1 (got {q})")
    a, b = _check_window(traj, J)
    if len(traj) < 2:
        return 0.0
    m = _power_masses(traj, q)
    cum = _cumulative(traj.times, m)
    total = _cumulative_at(b, traj.times, m, cum) - _cumulative_at(a, traj.times, m, cum)
    return float(max(total, 0.0) ** (1.0 / q))


def _field_series_norm(values: list[np.ndarray], traj, q: float, a: float, b: float) -> float:
    w = traj.grid.weights
    m = np.array([np.sum(w * np.abs(v) ** q) for v in values])
    cum = _cumulative(traj.times, m)
    total = _cumulative_at(b, traj.times, m, cum) - _cumulative_at(a, traj.times, m, cum)
    return float(max(total, 0.0) ** (1.0 / q))


@dataclass(frozen=True)
class QBundle:
    sup_hk: float
    du_norm: float
    dku_norm: float
    critical_norm: float

    @property
    def total(self) -> float:
        return self.sup_hk + self.du_norm + self.dku_norm + self.critical_norm


def q_bundle(traj: "Trajectory", J, basis: SpectralBasis, params: ModelParams) -> QBundle:
    a, b = _check_window(traj, J)
    t = traj.times
    inside = np.flatnonzero((t >= a) & (t <= b))
    if inside.size == 0:
        i = int(np.searchsorted(t, a, side="right")) - 1
        inside = np.array([i, min(i + 1, len(t) - 1)])
    lam = basis.eigenvalues
    coeffs = [basis.to_coeffs(v) for v in traj.values]
    sup_hk = max(hk_norm_from_coeffs(coeffs[i], lam, params.k) for i in inside)
    if len(traj) < 2:
        return QBundle(sup_hk, 0.0, 0.0, 0.0)
    p = 2.0 * (params.n + 2) / params.n
    d1 = [basis.from_coeffs(np.sqrt(lam) * c) for c in coeffs]
    dk = [basis.from_coeffs(lam ** (params.k / 2) * c) for c in coeffs]
    return QBundle(
        sup_hk=sup_hk,
        du_norm=_field_series_norm(d1, traj, p, a, b),
        dku_norm=_field_series_norm(dk, traj, p, a, b),
        critical_norm=spacetime_norm(traj, params.q, (a, b)),
    )


# --- Morawetz ----------------------------------------------------------------


def morawetz_check(traj: "Trajectory", A: float, basis: SpectralBasis, params: ModelParams,
                   bound: float = 100.0, r_exclude: int = 0, E: float | None = None) -> DiagnosticsReport:
    """int_I int_{r <= A|I|^{1/2}} F~(|u|)/r dx dt against E A |I|^{1/2}."""
    if len(traj) == 0:
        raise DegenerateTrajectoryError("diagnostics: empty trajectory")
    if not A > 1:
        raise ValueError(f"diagnostics: Morawetz scale A must exceed 1 (got {A})")
    g = traj.grid
    t0, t1 = traj.span
    I = t1 - t0
    rho = A * math.sqrt(I)
    note = ""
    if rho > g.R_max:
        warnings.warn(f"morawetz_check: radius {rho:.4g} capped at R_max = {g.R_max}", TailMassWarning, stacklevel=2)
        rho = g.R_max
        note = "radius capped at R_max"
    mask = g.nodes <= rho
    mask[: max(0, int(r_exclude))] = False
    w = g.weights[mask] / g.nodes[mask]
    dens = np.array([np.sum(w * tilde_F_array(np.abs(v[mask]), params)) for v in traj.values])
    lhs = float(np.sum(0.5 * (dens[1:] + dens[:-1]) * np.diff(traj.times))) if len(traj) > 1 else 0.0
    if E is None:
        E = float(traj.scalars["energy"][0]) if "energy" in traj.scalars else energy(traj.field(0), params, basis)
    rhs = E * A * math.sqrt(I)
    return DiagnosticsReport([make_check("morawetz", lhs, rhs, bound, note=note, radius=rho)])


# --- local momentum identity -------------------------------------------------


@dataclass(frozen=True)
class MomentumTerms:
    """Radial momentum identity terms on the evaluation window, as weighted L2 norms."""

    lhs: float
    flux: float
    dispersion: float
    nonlinear: float
    residual: float

    @property
    def scale(self) -> float:
        return max(self.lhs, self.flux, self.dispersion, self.nonlinear)


def _momentum_density(v: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    return np.imag(basis.dr_dirichlet(v) * np.conj(v))


def momentum_identity_terms(traj: "Trajectory", sample_index: int, basis: SpectralBasis,
                            params: ModelParams, r_exclude: int = 5, outer: float = 0.8) -> MomentumTerms:
    """Terms of d/dt Im(u_r conj u) = -2[(|u_r|^2)_r + (n-1)|u_r|^2/r] + (Delta|u|^2)_r / 2 - (F~(|u|))_r."""
    i = int(sample_index)
    if not (1 <= i <= len(traj) - 2):
        raise ValueError(f"diagnostics: sample index {i} needs both time neighbours")
    g = traj.grid
    t = traj.times
    h1, h2 = t[i] - t[i - 1], t[i + 1] - t[i]
    pm, p0, pp = (_momentum_density(traj.values[j], basis) for j in (i - 1, i, i + 1))
    lhs = (-h2 / (h1 * (h1 + h2))) * pm + ((h2 - h1) / (h1 * h2)) * p0 + (h1 / (h2 * (h1 + h2))) * pp

    u = traj.values[i]
    ur = basis.dr_dirichlet(u)
    ur2 = np.abs(ur) ** 2
    flux = -2.0 * (basis.dr(ur2) + (g.n - 1) * ur2 / g.nodes)
    disp = 0.5 * basis.dr(basis.radial_laplacian(np.abs(u) ** 2))
    nonlin = -basis.dr(tilde_F_array(np.abs(u), params))
    res = lhs - (flux + disp + nonlin)

    mask = g.nodes <= outer * g.R_max
    mask[: max(0, int(r_exclude))] = False
    w = g.weights[mask]

    def nrm(a):
        return float(np.sqrt(np.sum(w * a[mask] ** 2)))

    return MomentumTerms(nrm(lhs), nrm(flux), nrm(disp), nrm(nonlin), nrm(res))


def momentum_identity_residual(traj: "Trajectory", sample_index: int, basis: SpectralBasis,
                               params: ModelParams, r_exclude: int = 5) -> float:
    return momentum_identity_terms(traj, sample_index, basis, params, r_exclude).residual


# --- parameters, partition and the long-time bound ---------------------------


def eta1_exponent(n: int) -> Fraction:
    return Fraction(2 * (n + 2), 6 - n)


def eta2_exponent(n: int) -> Fraction:
    if n == 3:
        return Fraction(17 * n**3 - 58 * n**2 + 84 * n - 8, (6 - n) * (n - 2))
    if n == 4:
        return Fraction(3 * n**3 + 30 * n**2 + 20 * n + 8, (6 - n) * (n - 2))
    raise ValueError(f"diagnostics: dimension n must be 3 or 4 (got {n!r})")


def eta_exponent(n: int) -> Fraction:
    if n == 3:
        return Fraction(4 * (4 * n**2 - 15 * n + 22) * (11 * n**2 - 16 * n + 4), (n - 2) ** 2 * (6 - n))
    if n == 4:
        return Fraction(2 * (n**2 + 12 * n + 4) * (11 * n**2 - 16 * n + 4), (n + 2) * (6 - n))
    raise ValueError(f"diagnostics: dimension n must be 3 or 4 (got {n!r})")


@dataclass(frozen=True)
class EtaConfig:
    c1: float = 1.0
    c2: float = 1.0
    cc: float = 1.0
    eta3: float = 1e-2


@dataclass(frozen=True)
class EtaParameters:
    eta1: float
    eta2: float
    eta: float
    eta3: float
    M: float
    E: float
    c1: float
    c2: float
    cc: float
    exponents: tuple[Fraction, Fraction, Fraction]


def eta_parameters(E: float, M: float, params: ModelParams, config: EtaConfig | None = None) -> EtaParameters:
    if not M > 0:
        raise ValueError(f"diagnostics: M must be positive (got {M})")
    cfg = config or EtaConfig()
    for name in ("c1", "c2", "cc", "eta3"):
        if not getattr(cfg, name) > 0:
            raise ValueError(f"diagnostics: constant {name} must be positive")
    n = params.n
    ex = (eta1_exponent(n), eta2_exponent(n), eta_exponent(n))
    log_g = math.log(g_eval(M, params))
    vals = [math.exp(math.log(cst) - float(e) * log_g) for cst, e in zip((cfg.c1, cfg.c2, cfg.cc), ex)]
    return EtaParameters(vals[0], vals[1], vals[2], cfg.eta3, float(M), float(E), cfg.c1, cfg.c2, cfg.cc, ex)


def _solve_cumulative(target: float, times, m, cum) -> float:
    """Smallest-bracket bisection for C(t) = target on the monotone cumulative integral."""
    j = int(np.searchsorted(cum, target, side="left"))
    j = min(max(j, 1), len(times) - 1)
    lo, hi = float(times[j - 1]), float(times[j])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _cumulative_at(mid, times, m, cum) < target:
            lo = mid
        else:
            hi = mid
    return hi


def partition_intervals(traj: "Trajectory", eta1: float) -> IntervalFamily:
    """Consecutive intervals with q-power space-time mass eta1 each (last one at most eta1)."""
    if not eta1 > 0:
        raise ValueError(f"diagnostics: eta1 must be positive (got {eta1})")
    t0, t1 = traj.span
    if len(traj) < 2:
        raise DegenerateTrajectoryError("diagnostics: partition needs at least 2 samples")
    m = _power_masses(traj, traj.params.q)
    cum = _cumulative(traj.times, m)
    total = float(cum[-1])
    full = int(math.floor(total / eta1))
    if full >= 1 and total - full * eta1 <= 1e-12 * total:
        full -= 1  # the last full piece closes the span
    cuts = [t0] + [_solve_cumulative(l * eta1, traj.times, m, cum) for l in range(1, full + 1)] + [t1]
    intervals = np.column_stack([cuts[:-1], cuts[1:]])
    masses = np.diff([_cumulative_at(c, traj.times, m, cum) for c in cuts])
    return IntervalFamily(intervals, labels=list(range(len(intervals))), masses=masses)


def boundlong_predicate(traj: "Trajectory", M: float, constants: CriticalConstants, params: ModelParams,
                        basis: SpectralBasis, C1: float = 1.0, C2: float = 1.0) -> DiagnosticsReport:
    """|u|_q^q over the span against (C1 g^{a_n}(M))^{C2 g^{b_n+eps}(M)}, in log space."""
    hk = traj.scalars.get("hk_norm")
    if hk is None:
        hk = [hk_norm_from_coeffs(basis.to_coeffs(v), basis.eigenvalues, params.k) for v in traj.values]
    sup = float(np.max(hk)) if len(hk) else 0.0
    if M < sup * (1 - 1e-12):
        raise ValueError(f"diagnostics: M = {M} is below the observed sup H~^k norm {sup:.6g}")
    if not (C1 > 0 and C2 > 0):
        raise ValueError("diagnostics: C1 and C2 must be positive")
    lhs = spacetime_norm(traj, params.q) ** params.q if len(traj) > 1 else 0.0
    log_g = math.log(g_eval(M, params))
    log_rhs = C2 * math.exp(constants.b_plus * log_g) * (math.log(C1) + constants.a_n * log_g)
    log_lhs = math.log(lhs) if lhs > 0 else -math.inf
    log_ratio = log_lhs - log_rhs
    ratio = math.exp(log_ratio) if log_ratio < 700 else math.inf
    rhs = math.exp(log_rhs) if log_rhs < 700 else math.inf
    check = CheckResult("boundlong", lhs, rhs, ratio, bool(log_ratio <= 0), 1.0,
                        note=f"log_rhs={log_rhs:.17g}", extra={"log_rhs": log_rhs, "log_ratio": log_ratio})
    return DiagnosticsReport([check])


def scattering_cauchy(traj: "Trajectory", basis: SpectralBasis, params: ModelParams) -> np.ndarray:
    """H~^k norms of consecutive differences of e^{-it Delta} u(t) at the samples."""
    if len(traj) < 3:
        raise DegenerateTrajectoryError("diagnostics: scattering check needs at least 3 samples")
    worst = max(tail_fraction(traj.field(i)) for i in range(len(traj)))
    if worst > TAIL_FRACTION_LIMIT:
        warnings.warn(f"scattering_cauchy: tail mass fraction {worst:.3g} near the wall", TailMassWarning,
                      stacklevel=2)
    lam = basis.eigenvalues
    w = np.array([np.exp(1j * lam * t) * basis.to_coeffs(v) for t, v in zip(traj.times, traj.values)])
    return np.array([hk_norm_from_coeffs(d, lam, params.k) for d in np.diff(w, axis=0)])

