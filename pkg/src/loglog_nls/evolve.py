"""Strang splitting with an exact nonlinear phase substep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, g_eval
from .spectral import (
    GridSpec,
    RadialField,
    SpectralBasis,
    TAIL_FRACTION_LIMIT,
    hk_norm_from_coeffs,
    tail_fraction,
)

BLOWUP_AMPLITUDE = 1e10
SCALAR_NAMES = ("time", "mass", "energy", "hk_norm", "max_amplitude")


class BlowUpError(RuntimeError):
    """Amplitude overflow or NaN during time stepping."""


def _phase(values: np.ndarray, dt: float, params: ModelParams, coupling: float) -> np.ndarray:
    a = np.abs(values)
    if not np.all(np.isfinite(a)) or a.max(initial=0.0) > BLOWUP_AMPLITUDE:
        raise BlowUpError(f"evolve: amplitude {a.max(initial=0.0):.3g} exceeds {BLOWUP_AMPLITUDE:g} or is not finite")
    if dt == 0 or coupling == 0:
        return values.copy()
    theta = (coupling * dt) * a**params.power * g_eval(a, params)
    return values * np.exp(-1j * theta)


def nonlinear_phase_step(f: RadialField, dt: float, params: ModelParams, coupling: float = 1.0) -> RadialField:
    """Exact flow of i u_t = |u|^{4/(n-2)} g(|u|) u over time dt."""
    if not math.isfinite(dt):
        raise ValueError("evolve: dt must be finite")
    return RadialField(f.grid, _phase(f.values, dt, params, coupling))


def strang_step(f: RadialField, dt: float, basis: SpectralBasis, params: ModelParams,
                coupling: float = 1.0) -> RadialField:
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"evolve: dt must be positive (got {dt!r})")
    basis.check(f)
    v = _phase(f.values, 0.5 * dt, params, coupling)
    v = basis.from_coeffs(np.exp(-1j * basis.eigenvalues * dt) * basis.to_coeffs(v))
    v = _phase(v, 0.5 * dt, params, coupling)
    return RadialField(f.grid, v)


@dataclass(eq=False)
class Trajectory:
    params: ModelParams
    grid: GridSpec
    times: np.ndarray
    values: np.ndarray  # (samples, N) complex
    scalars: dict = field(default_factory=dict)
    dt: float | None = None
    sample_every: int | None = None
    coupling: float = 1.0
    truncated: bool = False
    blowup_time: float | None = None
    trusted_until: float | None = None

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 2 or self.values.shape != (self.times.size, self.grid.N):
            raise ValueError("evolve: trajectory values must have shape (samples, N)")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("evolve: sample times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    def field(self, i: int) -> RadialField:
        return RadialField(self.grid, self.values[i])

    @property
    def fields(self) -> list[RadialField]:
        return [self.field(i) for i in range(len(self))]

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])


def sample_scalars(f: RadialField, t: float, basis: SpectralBasis, params: ModelParams) -> dict:
    from .diagnostics import energy

    c = basis.to_coeffs(f.values)
    return {
        "time": float(t),
        "mass": float(np.sqrt(np.sum(f.grid.weights * np.abs(f.values) ** 2))),
        "energy": energy(f, params, basis),
        "hk_norm": hk_norm_from_coeffs(c, basis.eigenvalues, params.k),
        "max_amplitude": float(np.abs(f.values).max()),
    }


def trajectory_from_fields(fields, times, basis: SpectralBasis, params: ModelParams, **meta) -> Trajectory:
    """Assemble a trajectory (recomputing scalars) from stored fields."""
    times = np.asarray(times, dtype=float)
    rows = [sample_scalars(f, t, basis, params) for f, t in zip(fields, times)]
    scal = {k: np.array([r[k] for r in rows]) for k in SCALAR_NAMES}
    vals = np.array([f.values for f in fields]) if len(fields) else np.zeros((0, basis.grid.N), complex)
    traj = Trajectory(params, basis.grid, times, vals, scal, **meta)
    traj.trusted_until = _trusted_until(traj)
    return traj


def _trusted_until(traj: Trajectory) -> float | None:
    for t, v in zip(traj.times, traj.values):
        if tail_fraction(RadialField(traj.grid, v)) > TAIL_FRACTION_LIMIT:
            return float(t)
    return None


def evolve(u0: RadialField, T: float, dt: float, sample_every: int = 10,
           basis: SpectralBasis | None = None, params: ModelParams | None = None,
           coupling: float = 1.0) -> Trajectory:
    """Integrate from t = 0 to T, storing every sample_every-th step plus t = 0 and t = T.

    Consecutive half phases are fused into one full phase between samples.
    With coupling = 0 the run stays in coefficient space and is the exact
    linear flow. On blow-up the partial trajectory is returned, flagged.
    """
    if basis is None or params is None:
        raise ValueError("evolve: basis and params are required")
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"evolve: horizon T must be positive (got {T!r})")
    if not (math.isfinite(dt) and 0 < dt <= T):
        raise ValueError(f"evolve: need 0 < dt <= T (got dt = {dt!r})")
    if int(sample_every) != sample_every or sample_every < 1:
        raise ValueError(f"evolve: sample_every must be a positive integer (got {sample_every!r})")
    basis.check(u0)
    sample_every = int(sample_every)

    nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
    steps = np.full(nsteps, dt)
    steps[-1] = T - dt * (nsteps - 1)
    if steps[-1] <= 1e-12 * dt:  # T/dt integral up to rounding
        steps[-1] = dt
    lam = basis.eigenvalues

    fields = [RadialField(u0.grid, u0.values.copy())]
    times = [0.0]
    meta = dict(dt=dt, sample_every=sample_every, coupling=coupling)

    v = u0.values.copy()
    t = 0.0
    pending = 0.0  # nonlinear phase time owed on v
    c = basis.to_coeffs(v)
    try:
        if coupling != 0:
            _phase(v, 0.0, params, coupling)
        for i, h in enumerate(steps):
            if coupling == 0:
                c = np.exp(-1j * lam * h) * c
            else:
                v = _phase(v, pending + 0.5 * h, params, coupling)
                v = basis.from_coeffs(np.exp(-1j * lam * h) * basis.to_coeffs(v))
                pending = 0.5 * h
            t = float(np.sum(steps[: i + 1])) if i == nsteps - 1 else (i + 1) * dt
            if (i + 1) % sample_every == 0 or i == nsteps - 1:
                if coupling == 0:
                    out = basis.from_coeffs(c)
                else:
                    v = _phase(v, pending, params, coupling)
                    pending = 0.0
                    out = v
                if not np.all(np.isfinite(out)):
                    raise BlowUpError("evolve: non-finite field")
                fields.append(RadialField(u0.grid, out.copy()))
                times.append(T if i == nsteps - 1 else t)
    except BlowUpError:
        traj = trajectory_from_fields(fields, times, basis, params, **meta)
        traj.truncated = True
        traj.blowup_time = t
        return traj
    return trajectory_from_fields(fields, times, basis, params, **meta)
