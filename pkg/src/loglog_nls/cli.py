"""Command-line front end.

Exit codes: 0 ok, 1 usage or missing file, 2 validation, 3 runtime failure or blow-up.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bourgain import ConcentrationError, IntervalFamily, check_report, concentrate
from .config import (
    LEIBNIZ_HELP,
    RUN_HELP,
    ConfigError,
    LeibnizConfig,
    RunConfig,
    parse_config,
    parse_leibniz_config,
)
from .core import critical_constants
from .diagnostics import (
    DiagnosticsReport,
    EtaConfig,
    boundlong_predicate,
    eta_parameters,
    make_check,
    mass_bound_checks,
    momentum_identity_terms,
    morawetz_check,
    partition_intervals,
    q_bundle,
    scattering_cauchy,
)
from .evolve import SCALAR_NAMES, Trajectory, evolve, trajectory_from_fields
from .leibniz import catalogue, constant_survey, survey_csv
from .persist import CheckpointError, read_checkpoint, read_scalars_csv, scalars_csv, write_checkpoint
from .spectral import (
    RadialField,
    SpectralBasis,
    build_basis,
    dispersive_check,
    free_propagate,
    make_grid,
)

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_text(path) -> str:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {p}")
    return p.read_text(encoding="utf-8")


# --- runs --------------------------------------------------------------------


def initial_field(cfg: RunConfig, basis: SpectralBasis) -> RadialField:
    grid = basis.grid
    if cfg.init == "zero":
        return RadialField.zeros(grid)
    if cfg.init == "gaussian":
        return RadialField.from_function(grid, lambda r: cfg.amplitude * np.exp(-r**2 / (2 * cfg.width**2)))
    if cfg.init == "mode":
        return RadialField(grid, cfg.amplitude * basis.eigenvectors[:, cfg.mode - 1])
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        j = np.arange(cfg.band)
        coef = (rng.standard_normal(cfg.band) + 1j * rng.standard_normal(cfg.band)) / (1.0 + j) ** 2
        return RadialField(grid, cfg.amplitude * (basis.eigenvectors[:, : cfg.band] @ coef))
    ck = read_checkpoint(cfg.checkpoint)
    if (ck.n, ck.N) != (grid.n, grid.N) or ck.R_max != grid.R_max:
        raise ConfigError("cli: checkpoint grid does not match the configured grid")
    return RadialField(grid, ck.values)


def run_simulation(cfg: RunConfig, out: Path) -> Trajectory:
    params = cfg.model()
    basis = build_basis(make_grid(cfg.n, cfg.N, cfg.R_max))
    u0 = initial_field(cfg, basis)
    traj = evolve(u0, cfg.T, cfg.dt, cfg.sample_every, basis, params, coupling=cfg.coupling)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(replace(cfg, out=str(out)).to_text())
    ck = out / "checkpoints"
    ck.mkdir(exist_ok=True)
    for old in ck.glob("sample_*.nlsl"):
        old.unlink()
    for i, (t, v) in enumerate(zip(traj.times, traj.values)):
        write_checkpoint(ck / f"sample_{i:06d}.nlsl", cfg.n, cfg.R_max, t, v)
    (out / "scalars.csv").write_text(scalars_csv(traj.scalars, SCALAR_NAMES))
    status = [f"truncated = {int(traj.truncated)}",
              f"blowup_time = {traj.blowup_time!r}",
              f"trusted_until = {traj.trusted_until!r}"]
    (out / "status.txt").write_text("\n".join(status) + "\n")
    return traj


def _simulate_one(args) -> tuple[str, int, str]:
    path, out, seed = args
    try:
        cfg = parse_config(_read_text(path))
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        traj = run_simulation(cfg, Path(out) if out else Path(cfg.out))
    except UsageError as exc:
        return path, EXIT_USAGE, str(exc)
    except (ConfigError, CheckpointError) as exc:
        return path, EXIT_VALIDATION, str(exc)
    if traj.truncated:
        return path, EXIT_RUNTIME, f"blow-up at t = {traj.blowup_time}; partial trajectory written"
    return path, EXIT_OK, f"{len(traj)} samples to t = {traj.times[-1]:.6g}"


def load_run(run_dir) -> tuple[RunConfig, SpectralBasis, Trajectory]:
    run_dir = Path(run_dir)
    cfg = parse_config(_read_text(run_dir / "config.txt"))
    paths = sorted((run_dir / "checkpoints").glob("sample_*.nlsl"))
    if not paths:
        raise UsageError(f"no checkpoints in {run_dir / 'checkpoints'}")
    basis = build_basis(make_grid(cfg.n, cfg.N, cfg.R_max))
    fields, times = [], []
    for p in paths:
        ck = read_checkpoint(p)
        if (ck.n, ck.N, ck.R_max) != (cfg.n, cfg.N, cfg.R_max):
            raise CheckpointError(f"persist: {p.name} does not match the run grid")
        fields.append(RadialField(basis.grid, ck.values))
        times.append(ck.time)
    traj = trajectory_from_fields(fields, times, basis, cfg.model(), dt=cfg.dt,
                                  sample_every=cfg.sample_every, coupling=cfg.coupling)
    return cfg, basis, traj


def diagnose(cfg: RunConfig, basis: SpectralBasis, traj: Trajectory, recorded: dict | None = None) -> DiagnosticsReport:
    params = cfg.model()
    rep = DiagnosticsReport()
    if recorded is not None:
        e_new, e_old = traj.scalars["energy"], recorded["energy"]
        scale = max(float(np.max(np.abs(e_new))), 1e-300)
        rep.checks.append(make_check("energy_reproducible", float(np.max(np.abs(e_new - e_old))), 1e-10 * scale))
    E0 = float(traj.scalars["energy"][0])
    rep.checks.append(make_check("energy_drift", abs(float(traj.scalars["energy"][-1]) - E0), E0, 1e-6))
    if len(traj) >= 3:
        R = cfg.mass_radius or cfg.R_max / 2
        rep.extend(mass_bound_checks(traj, R, basis, cfg.mass_bound))
        mid = len(traj) // 2
        terms = momentum_identity_terms(traj, mid, basis, params, cfg.r_exclude)
        rep.checks.append(make_check("momentum_identity", terms.residual, terms.scale, 1e-3,
                                     note=f"t={traj.times[mid]:.6g}"))
        inc = scattering_cauchy(traj, basis, params)
        half = traj.times[-1] / 2
        first = float(np.sum(inc[traj.times[1:] <= half]))
        second = float(np.sum(inc[traj.times[:-1] >= half]))
        rep.checks.append(make_check("scattering_decay", second, first, 0.1))
    rep.extend(morawetz_check(traj, cfg.morawetz_A, basis, params, cfg.morawetz_bound, cfg.morawetz_exclude))
    M = cfg.M or float(np.max(traj.scalars["hk_norm"]))
    if M > 0:
        rep.extend(boundlong_predicate(traj, M, critical_constants(cfg.n, cfg.a_n, cfg.eps), params, basis,
                                       cfg.C1, cfg.C2))
    return rep


# --- subcommands -------------------------------------------------------------


def cmd_simulate(ns) -> int:
    jobs = [(p, (ns.out if len(ns.config) == 1 else (str(Path(ns.out) / Path(p).stem) if ns.out else None)),
             ns.seed) for p in ns.config]
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as ex:
            results = list(ex.map(_simulate_one, jobs))
    else:
        results = [_simulate_one(j) for j in jobs]
    code = EXIT_OK
    for path, rc, msg in results:
        print(f"{path}: {msg}", file=sys.stderr if rc else sys.stdout)
        code = max(code, rc)
    return code


def cmd_diagnose(ns) -> int:
    cfg, basis, traj = load_run(ns.run_dir)
    recorded = read_scalars_csv(_read_text(Path(ns.run_dir) / "scalars.csv"))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = diagnose(cfg, basis, traj, recorded)
        qb = q_bundle(traj, None, basis, cfg.model())
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(ns.out) if ns.out else Path(ns.run_dir) / "report.csv"
    out.write_text(rep.to_csv())
    sys.stdout.write(rep.to_csv())
    print(f"# Q bundle: sup_hk={qb.sup_hk:.17g} du={qb.du_norm:.17g} dku={qb.dku_norm:.17g} "
          f"critical={qb.critical_norm:.17g} total={qb.total:.17g}")
    return EXIT_OK


def cmd_partition(ns) -> int:
    cfg, basis, traj = load_run(ns.run_dir)
    params = cfg.model()
    M = cfg.M or float(np.max(traj.scalars["hk_norm"]))
    if M <= 0:
        raise ConfigError("diagnostics: M must be positive; zero data has no H~^k bound to use")
    eta = eta_parameters(float(traj.scalars["energy"][0]), M, params,
                         EtaConfig(cfg.c1, cfg.c2, cfg.cc, cfg.eta3))
    fam = partition_intervals(traj, eta.eta1)
    out = Path(ns.out) if ns.out else Path(ns.run_dir) / "family.txt"
    fam.write(out)
    print(f"eta1 = {eta.eta1!r}\neta2 = {eta.eta2!r}\neta = {eta.eta!r}\neta3 = {eta.eta3!r}\n"
          f"M = {M!r}\nE = {eta.E!r}\nL = {len(fam)}\nfamily written to {out}")
    return EXIT_OK


def cmd_bourgain(ns) -> int:
    fam = IntervalFamily.from_text(_read_text(ns.family))
    if not 0 < ns.eta < 1:
        raise ConfigError(f"bourgain: eta must lie in (0, 1) (got {ns.eta})")
    if len(fam) == 0:
        raise ConfigError("bourgain: empty family")
    try:
        rep = concentrate(fam, ns.eta)
    except ConcentrationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RUNTIME
    outcome = check_report(fam, rep)
    sys.stdout.write(rep.to_text())
    print(f"check = {'pass' if outcome.passed else 'fail: ' + str(outcome.violation)}")
    return EXIT_OK if outcome.passed else EXIT_RUNTIME


def cmd_constants(ns) -> int:
    cc = critical_constants(ns.n)
    print(f"c_{ns.n} = {cc.c_n}")
    print(f"b_{ns.n} = {cc.b_n}")
    print(f"c_{ns.n} ~ {float(cc.c_n):.17g}")
    print(f"b_{ns.n} ~ {float(cc.b_n):.17g}")
    ok = cc.c_n * cc.b_n == 1
    print(f"c_{ns.n} * b_{ns.n} = {cc.c_n * cc.b_n}")
    return EXIT_OK if ok else EXIT_RUNTIME


def run_freecheck(N: int = 1024) -> list[tuple[str, bool, str]]:
    """Free-flow acceptance suite: Gaussian fidelity, L2 isometry and dispersive decay."""
    results = []
    grid = make_grid(3, N, 30.0)
    basis = build_basis(grid)
    f = RadialField.from_function(grid, lambda r: np.exp(-r**2 / 2))
    l2 = np.sqrt(np.sum(grid.weights * np.abs(f.values) ** 2))
    worst_rel, worst_iso = 0.0, 0.0
    for t in np.linspace(0.25, 2.0, 8):
        u = free_propagate(f, t, basis).values
        z = 1 + 2j * t
        exact = z**-1.5 * np.exp(-grid.nodes**2 / (2 * z))
        m = np.abs(exact) > 1e-6
        worst_rel = max(worst_rel, float(np.max(np.abs(u[m] - exact[m]) / np.abs(exact[m]))))
        worst_iso = max(worst_iso, abs(np.sqrt(np.sum(grid.weights * np.abs(u) ** 2)) / l2 - 1))
    results.append(("gaussian_profile", worst_rel <= 1e-4, f"max relative error {worst_rel:.3g}"))
    results.append(("l2_isometry", worst_iso <= 1e-10, f"max relative change {worst_iso:.3g}"))

    rep = dispersive_check(f, 2.0, [0.0, 0.5, 1.0, 2.0], basis)
    dev = float(np.max(np.abs(rep.ratios - 1)))
    results.append(("dispersive_p2", dev <= 1e-10, f"max |rho - 1| = {dev:.3g}"))

    sigma = 0.4
    wide = make_grid(3, N, 60.0)
    wb = build_basis(wide)
    h = RadialField.from_function(wide, lambda r: np.exp(-r**2 / (2 * sigma**2)))
    times = np.linspace(0.5, 2.0, 7)
    rep = dispersive_check(h, math.inf, times, wb)
    limit = (4 * math.pi) ** -1.5
    spread = float((rep.ratios.max() - rep.ratios.min()) / limit)
    off = float(np.max(np.abs(rep.ratios / limit - 1)))
    results.append(("dispersive_pinf", spread <= 0.05 and off <= 0.05,
                    f"spread {spread:.3g}, max deviation from (4 pi)^(-3/2) {off:.3g}"))
    return results


def cmd_freecheck(ns) -> int:
    results = run_freecheck(ns.N)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_RUNTIME


def cmd_leibniz(ns) -> int:
    cfg: LeibnizConfig = parse_leibniz_config(_read_text(ns.config))
    seed = cfg.seed if ns.seed is None else ns.seed
    wanted = [c.strip() for c in cfg.cases.split(",")]
    cases = [c for c in catalogue() if c.case_id in wanted]
    rows = constant_survey(cases, cfg.samples, seed, N=cfg.N, band=cfg.band)
    text = survey_csv(rows)
    out = Path(ns.out or cfg.out)
    out.write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _defaults_epilog() -> str:
    lines = ["run configuration keys (key = value, # comments, unknown keys rejected):"]
    for name, help_text in RUN_HELP.items():
        lines.append(f"  {name:<17} {help_text} [default {getattr(RunConfig(), name)!r}]")
    lines.append("leibniz configuration keys:")
    for name, help_text in LEIBNIZ_HELP.items():
        lines.append(f"  {name:<17} {help_text} [default {getattr(LeibnizConfig(), name)!r}]")
    lines.append("exit codes: 0 ok, 1 usage, 2 validation, 3 runtime failure or blow-up")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="loglog-nls", description=__doc__.splitlines()[0],
                epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run the integrator and write checkpoints plus scalars.csv")
    s.add_argument("config", nargs="+")
    s.add_argument("--out", help="output directory (parent directory when several configs are given)")
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, default=1, help="parallel runs for several configs")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("diagnose", help="run all checks on a run directory and write report.csv")
    s.add_argument("run_dir")
    s.add_argument("--out")
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("partition", help="split a run into equal space-time mass intervals")
    s.add_argument("run_dir")
    s.add_argument("--out")
    s.set_defaults(func=cmd_partition)

    s = sub.add_parser("bourgain", help="interval concentration on a family file")
    s.add_argument("family")
    s.add_argument("--eta", type=float, required=True)
    s.set_defaults(func=cmd_bourgain)

    s = sub.add_parser("constants", help="print c_n and b_n exactly")
    s.add_argument("--n", type=int, required=True, choices=(3, 4))
    s.set_defaults(func=cmd_constants)

    s = sub.add_parser("freecheck", help="free-flow acceptance suite")
    s.add_argument("--N", type=int, default=1024)
    s.set_defaults(func=cmd_freecheck)

    s = sub.add_parser("leibniz", help="fractional Leibniz constant survey")
    s.add_argument("config")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_leibniz)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, CheckpointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
