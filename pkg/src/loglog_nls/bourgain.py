"""Interval-concentration selection over an equal-mass partition of a time span.

Repeatedly pick the longest interval of the current run, drop every interval
at least half as long, and descend into the most populated surviving run.
The picks shrink dyadically and all sit within a bounded multiple of their
own length from the final one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

REL_SLACK = 1e-12


class ConcentrationError(RuntimeError):
    """The family lacks the structure the selection relies on."""


@dataclass(eq=False)
class IntervalFamily:
    intervals: np.ndarray
    labels: list | None = None
    masses: np.ndarray | None = None

    def __post_init__(self) -> None:
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if iv.size and not np.all(np.isfinite(iv)):
            raise ValueError("bourgain: interval endpoints must be finite")
        if np.any(iv[:, 1] <= iv[:, 0]):
            raise ValueError("bourgain: every interval needs start < end")
        if len(iv) > 1 and (np.any(np.diff(iv[:, 0]) <= 0) or np.any(iv[1:, 0] < iv[:-1, 1])):
            raise ValueError("bourgain: intervals must be sorted with disjoint interiors")
        self.intervals = iv
        if self.labels is None:
            self.labels = list(range(len(iv)))
        elif len(self.labels) != len(iv):
            raise ValueError("bourgain: one label per interval")

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    def to_text(self) -> str:
        return "".join(f"{a:.17g} {b:.17g}\n" for a, b in self.intervals)

    @classmethod
    def from_text(cls, text: str) -> "IntervalFamily":
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"bourgain: line {lineno}: expected two columns")
            rows.append((float(parts[0]), float(parts[1])))
        return cls(np.array(rows, dtype=float).reshape(-1, 2))

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def read(cls, path) -> "IntervalFamily":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class ConcentrationReport:
    t_bar: float
    indices: tuple[int, ...]
    intervals: tuple[tuple[float, float], ...]
    eta: float
    L: int
    K: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "K", len(self.indices))

    def k_lower_bound(self) -> float:
        return k_lower_bound(self.L, self.eta)

    def to_text(self) -> str:
        lines = [f"t_bar = {self.t_bar!r}", f"K = {self.K}", f"eta = {self.eta!r}", f"L = {self.L}",
                 f"K_lower_bound = {self.k_lower_bound()!r}"]
        for k, (i, (a, b)) in enumerate(zip(self.indices, self.intervals), 1):
            lines.append(f"J[{k}] = index {i}: [{a!r}, {b!r}] length {b - a!r}")
        return "\n".join(lines) + "\n"


def k_lower_bound(L: int, eta: float) -> float:
    """-log L / (2 log(eta/8)); zero when it is vacuous."""
    if L <= 1 or eta >= 8:
        return 0.0
    return -math.log(L) / (2.0 * math.log(eta / 8.0))


def _dist(t: float, a: float, b: float) -> float:
    return max(a - t, 0.0, t - b)


def concentrate(family: IntervalFamily, eta: float) -> ConcentrationReport:
    if len(family) == 0:
        raise ValueError("bourgain: empty family")
    if not (0 < eta < 1):
        raise ValueError(f"bourgain: eta must lie in (0, 1) (got {eta!r})")
    iv = family.intervals
    lengths = family.lengths
    comp = np.arange(len(family))
    picks: list[int] = []
    while True:
        # np.argmax returns the first maximum, i.e. the earliest start
        j = int(comp[np.argmax(lengths[comp])])
        picks.append(j)
        if len(comp) <= 100.0 / eta:
            break
        span = iv[comp[-1], 1] - iv[comp[0], 0]
        if lengths[j] < eta * span * (1 - REL_SLACK):
            raise ConcentrationError(
                f"bourgain: longest interval {lengths[j]:.6g} is below eta times its run span {span:.6g}")
        keep = lengths[comp] < 0.5 * lengths[j]
        runs, start = [], None
        for pos, ok in enumerate(keep):
            if ok and start is None:
                start = pos
            elif not ok and start is not None:
                runs.append((start, pos))
                start = None
        if start is not None:
            runs.append((start, len(keep)))
        if not runs:
            break
        a, b = max(runs, key=lambda r: r[1] - r[0])  # max keeps the earliest on ties
        comp = comp[a:b]

    last = iv[picks[-1]]
    t_bar = 0.5 * (last[0] + last[1])
    for x, y in zip(picks, picks[1:]):
        if lengths[x] < 2 * lengths[y]:
            raise ConcentrationError("bourgain: dyadic decay violated")
    for p in picks:
        if _dist(t_bar, *iv[p]) > lengths[p] / eta * (1 + REL_SLACK):
            raise ConcentrationError("bourgain: distance bound violated")
    if len(picks) < k_lower_bound(len(family), eta):
        raise ConcentrationError("bourgain: selection shorter than the guaranteed count")
    return ConcentrationReport(
        t_bar=float(t_bar),
        indices=tuple(picks),
        intervals=tuple((float(iv[p, 0]), float(iv[p, 1])) for p in picks),
        eta=float(eta),
        L=len(family),
    )


@dataclass(frozen=True)
class CheckOutcome:
    passed: bool
    violation: str | None = None
    detail: str = ""


def check_report(family: IntervalFamily, report: ConcentrationReport) -> CheckOutcome:
    """Re-verify a report from scratch against the family."""
    rows = [(float(a), float(b)) for a, b in family.intervals]
    for i, sel in zip(report.indices, report.intervals):
        if not (0 <= i < len(rows)):
            raise ValueError(f"bourgain: report references missing interval {i}")
        if rows[i] != (float(sel[0]), float(sel[1])):
            raise ValueError(f"bourgain: report interval {i} does not match the family")
    if len(report.indices) != report.K or report.K == 0:
        return CheckOutcome(False, "count", "selected list is empty or K disagrees with it")
    sizes = [rows[i][1] - rows[i][0] for i in report.indices]
    for k in range(len(sizes) - 1):
        if not sizes[k] >= 2 * sizes[k + 1]:
            return CheckOutcome(False, "dyadic-decay", f"|J_{k + 1}| = {sizes[k]!r} < 2 |J_{k + 2}| = {2 * sizes[k + 1]!r}")
    t = report.t_bar
    for k, i in enumerate(report.indices):
        a, b = rows[i]
        gap = a - t if t < a else (t - b if t > b else 0.0)
        allowed = sizes[k] / report.eta
        if gap > allowed * (1 + REL_SLACK):
            return CheckOutcome(False, "distance", f"dist(t_bar, J_{k + 1}) = {gap!r} > {allowed!r}")
    L = len(rows)
    if L > 1 and report.eta < 8:
        need = -math.log(L) / (2 * math.log(report.eta / 8))
        if report.K < need:
            return CheckOutcome(False, "k-lower-bound", f"K = {report.K} < {need!r}")
    return CheckOutcome(True)


def structured_family(rng: np.random.Generator, L: int, eta: float, span: float = 1.0) -> IntervalFamily:
    """Random family in which every run the selection can visit has a long interval.

    Each call places one interval of length at least eta times its allotted
    window, then fills the windows on either side with strictly shorter
    intervals (below half its length) recursively. Blocks of at most 100/eta
    intervals, where the selection stops, are filled with plain slots so the
    nesting depth stays within floating-point resolution.
    """
    if L < 1:
        raise ValueError("bourgain: need L >= 1")
    if not (0 < eta <= 0.8):
        raise ValueError("bourgain: generator supports 0 < eta <= 0.8")
    out: list[tuple[float, float]] = []

    def fill(count: int, a: float, b: float, cap: float) -> None:
        if count == 0:
            return
        if count <= 100.0 / eta:
            slot = (b - a) / count
            for j in range(count):
                ell = rng.uniform(0.2, 0.9) * min(slot, 0.999 * cap)
                s = a + j * slot + rng.uniform(0.0, slot - ell)
                out.append((s, s + ell))
            return
        width = min(b - a, cap / (1.1 * eta))
        s = a + rng.uniform(0.0, (b - a) - width)
        lo, hi = 1.05 * eta * width, min(0.999 * cap, 0.9 * width)
        ell = rng.uniform(lo, hi)
        left = int(round(rng.uniform(0.3, 0.7) * (count - 1)))
        right = count - 1 - left
        room = width - ell
        share = (left + 0.5) / (count + 0.0)
        gl = room * min(max(share + rng.uniform(-0.1, 0.1), 0.05), 0.95)
        fill(left, s, s + gl, 0.4999 * ell)
        out.append((s + gl, s + gl + ell))
        fill(right, s + gl + ell, s + width, 0.4999 * ell)

    fill(int(L), 0.0, float(span), math.inf if span == math.inf else float(span))
    return IntervalFamily(np.array(out))
