"""``acsolve`` command line: bind a TOML config to one harness experiment.

Exit codes: 0 every asserted property held, 1 invalid config or arguments,
2 a property failed or a fit was inconclusive, 3 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config, harness, selftest, timegrid
from .potential import ConfigError
from .scheme import MBPBreachError
from .trajectory import MBP_SLACK, run_adaptive, run_fixed

log = logging.getLogger("acsolve")

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY, EXIT_RUNTIME = 0, 1, 2, 3


def _finish(report: harness.ExperimentReport, outdir: Path) -> int:
    report.write(outdir)
    print(f"{report.label}: wrote {outdir / (report.label + '.csv')}")
    if report.fitted_order is not None:
        print(f"{report.label}: fitted order {report.fitted_order:.4f}")
    for msg in report.failures:
        print(f"FAIL {msg}", file=sys.stderr)
    if report.inconclusive:
        print(f"INCONCLUSIVE {report.label}: slope standard error above {harness.FIT_STDERR_LIMIT}", file=sys.stderr)
    if report.passed:
        print(f"{report.label}: pass")
        return EXIT_OK
    return EXIT_PROPERTY


def cmd_converge(rc: config.RunConfig, outdir: Path) -> int:
    run, tm, chk = rc.section("run"), rc.section("time"), rc.section("checks")
    report = harness.convergence_study(
        rc.scheme,
        rc.initial,
        tm["T"],
        tm["taus"],
        grid_kind=tm["grid"],
        seed=run["seed"],
        tau_ref=rc.tau_ref,
        r_max=tm["r_max"],
        shrink_first=tm["shrink_first_step"],
        label=run["label"],
        expected_order=config.expected(chk["expected_order"]),
        order_tol=chk["order_tol"],
        g_expected_order=config.expected(chk["g_expected_order"]),
        g_order_tol=chk["g_order_tol"],
    )
    return _finish(report, outdir)


def cmd_mbp(rc: config.RunConfig, outdir: Path) -> int:
    run, tm = rc.section("run"), rc.section("time")
    report = harness.mbp_scan(
        rc.scheme,
        rc.initial,
        tm["T"],
        tm["taus"],
        variants=tuple(rc.section("scheme")["variants"]),
        label=run["label"],
        trace_dir=outdir / "traces",
    )
    return _finish(report, outdir)


def cmd_energy(rc: config.RunConfig, outdir: Path) -> int:
    run, tm, chk = rc.section("run"), rc.section("time"), rc.section("checks")
    report = harness.energy_study(
        rc.scheme,
        rc.initial,
        tm["T"],
        tm["taus"],
        label=run["label"],
        expected_order=config.expected(chk["energy_expected_order"]),
        order_tol=chk["energy_order_tol"],
        trace_dir=outdir / "traces",
    )
    return _finish(report, outdir)


def cmd_coarsen(rc: config.RunConfig, outdir: Path) -> int:
    run, tm, chk = rc.section("run"), rc.section("time"), rc.section("checks")
    report = harness.coarsening_benchmark(
        rc.scheme,
        rc.initial,
        rc.adaptive,
        tm["T"],
        snapshot_times=run["snapshot_times"],
        label=run["label"],
        energy_signal=tm["energy_signal"],
        energy_rtol=chk["energy_rtol"],
        outdir=outdir,
    )
    return _finish(report, outdir)


def cmd_simulate(rc: config.RunConfig, outdir: Path) -> int:
    run, tm, chk = rc.section("run"), rc.section("time"), rc.section("checks")
    cfg = rc.scheme
    phi0 = rc.initial.build(cfg.spec)
    snaps = [t for t in run["snapshot_times"] if t <= tm["T"]]
    if tm["grid"] == "adaptive":
        traj = run_adaptive(cfg, phi0, tm["T"], rc.adaptive, rc.eta, tm["energy_signal"], snaps)
    else:
        g = harness.make_grid(tm["grid"], tm["T"], tm["tau"], tm["r_max"], run["seed"], tm["shrink_first_step"])
        traj = run_fixed(cfg, phi0, g.taus, rc.eta, snaps)
    label = run["label"]
    beta = cfg.potential.beta
    outdir.mkdir(parents=True, exist_ok=True)
    harness.write_trace(outdir / f"{label}_trace.csv", traj)
    harness.write_snapshots(outdir / "snapshots", label, traj, beta)
    report = harness.ExperimentReport(
        label, ("N", "T", "max_norm", "psi_max", "final_energy", "energy_monotone", "clamped_steps")
    )
    clamped = sum(r.clamped for r in traj.records)
    report.rows.append(
        (len(traj.taus), traj.state.t, traj.max_norm, traj.psi_max, traj.records[-1].energy_orig, traj.energy_monotone, clamped)
    )
    if not traj.energy_monotone:
        report.failures.append(f"energy: modified energy increased (worst excess {traj.energy_excess():.3e})")
    if chk["assert_mbp"] and traj.max_norm > beta + MBP_SLACK:
        report.failures.append(f"MBP: max |phi| = {traj.max_norm!r} exceeds beta = {beta!r}")
    report.extra.update(variant=cfg.variant, grid=tm["grid"], eta=traj.eta, prng=timegrid.PRNG_ALGORITHM)
    report.passed = not report.failures
    return _finish(report, outdir)


def cmd_selftest() -> int:
    results = selftest.run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_PROPERTY


COMMANDS = {
    "converge": cmd_converge,
    "mbp": cmd_mbp,
    "energy": cmd_energy,
    "simulate": cmd_simulate,
    "coarsen": cmd_coarsen,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="acsolve", description="Variable-step BDF2 sESAV Allen-Cahn experiments.")
    p.add_argument("command", nargs="?", choices=[*COMMANDS, "selftest"])
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--out", help="output directory (overrides run.output)")
    p.add_argument("--seed", type=int, help="master seed (overrides run.seed and initial.seed)")
    p.add_argument("--print-defaults", action="store_true", help="print every config key with its default and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.print_defaults:
        print(config.defaults_toml(), end="")
        return EXIT_OK
    if args.command is None:
        print("error: command: one of " + ", ".join([*COMMANDS, "selftest"]) + " is required", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "selftest":
        return cmd_selftest()
    try:
        if args.config is None:
            raise ConfigError("config: --config is required")
        raw = config.load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {args.seed}")
            raw["run"]["seed"] = args.seed
            raw["initial"]["seed"] = args.seed
        rc = config.build(raw, args.command)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.out if args.out is not None else rc.section("run")["output"])
    try:
        return COMMANDS[args.command](rc, outdir)
    except MBPBreachError as err:
        print(f"FAIL MBP: {err}", file=sys.stderr)
        return EXIT_PROPERTY
    except Exception as err:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
