"""``qmetrics`` command line.

Each subcommand writes into ``<output>/<subcommand or experiment>/``. The
output root comes from ``--output``, then ``$QMETRICS_OUTPUT_DIR``, then the
config file. Exit status is 0 on success, 2 for invalid configuration or
input, and 1 for a failed computation.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import config as config_mod
from . import experiments, plotting, solver1e, solver2e
from .dynamics import propagate, write_trajectory
from .metrics import UNIT, fit_slope_through_origin, read_records
from .potentials import (
    fourier_potential,
    load_preset_family,
    sample_fourier_family,
    shift_to_ground_energy,
    write_potential,
)

log = logging.getLogger("qmetrics")

EXPERIMENTS = {
    # name: (electrons, interacting, default convention)
    "fig2": (1, False, "natural"),
    "fig3": (2, True, UNIT),
    "fig4": (2, False, UNIT),
}


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("-o", "--output", help="output root directory")
    p.add_argument("--threads", type=int, help="maximum worker processes")
    p.add_argument("--preset", choices=["1e", "2e", "one_electron", "two_electron"], help="use a tabulated family")
    p.add_argument("--seed", type=int, help="draw a random Fourier family from this seed")
    p.add_argument("--count", type=int, help="random family size")
    p.add_argument("--strength", type=float, help="microwell strength for random families")
    p.add_argument("--points", type=int, help="grid points")
    p.add_argument("--half-length", type=float, help="grid half length L (a.u.)")
    p.add_argument("--convention", choices=["natural", "unit", "unit_normalized"])
    p.add_argument("--spin", choices=list(solver2e.SPIN_SECTORS), help="two-electron exchange sector")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--interacting", dest="interacting", action="store_const", const=True)
    group.add_argument("--non-interacting", dest="interacting", action="store_const", const=False)
    p.add_argument("--field", type=float, help="field strength (a.u.)")
    p.add_argument("--dt", type=float, help="time step (a.u.)")
    p.add_argument("--total-time", type=float, help="propagation time (a.u.)")
    p.add_argument("--stride", type=int, help="steps between stored snapshots")
    p.add_argument("--reference", help="reference system id for trails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmetrics", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("potentials", help="write potentials shifted by their ground energy")
    _add_common(p)
    p = sub.add_parser("solve1e", help="one-electron ground states, wavefunctions and densities")
    _add_common(p)
    p = sub.add_parser("solve2e", help="two-electron ground states and densities")
    _add_common(p)
    p = sub.add_parser("propagate", help="field-driven one-electron trajectories")
    _add_common(p)
    p.add_argument("--system", action="append", help="only propagate these system ids")
    p = sub.add_parser("distances", help="pairwise distances across a family")
    _add_common(p)
    p.add_argument("--electrons", type=int, choices=[1, 2], default=2)
    p = sub.add_parser("experiment", help="reproduce fig2, fig3 or fig4")
    p.add_argument("which", choices=sorted(EXPERIMENTS))
    _add_common(p)
    p = sub.add_parser("plot", help="render a records CSV to SVG")
    p.add_argument("records", type=Path)
    p.add_argument("-o", "--output", type=Path, help="SVG path (default: next to the CSV)")
    p.add_argument("--convention", choices=["natural", "unit", "unit_normalized"])
    p.add_argument("--slope", type=float, help="draw this line instead of fitting one")
    return parser


def _apply_overrides(cfg: config_mod.RunConfig, args) -> config_mod.RunConfig:
    def upd(section, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(section, **changes) if changes else section

    family = cfg.family
    if args.preset is not None:
        family = replace(family, source="preset", preset=args.preset)
    if args.seed is not None:
        family = replace(family, source="random", seed=args.seed)
    family = upd(family, count=args.count, strength=args.strength)
    cfg = replace(
        cfg,
        family=family,
        grid=upd(cfg.grid, num_points=args.points, half_length=args.half_length),
        solver=upd(cfg.solver, spin=args.spin, interacting=args.interacting),
        propagation=upd(
            cfg.propagation,
            field_strength=args.field,
            dt=args.dt,
            total_time=args.total_time,
            record_stride=args.stride,
            reference=args.reference,
        ),
        metrics=upd(cfg.metrics, convention=args.convention),
        output=upd(cfg.output, directory=args.output),
    )
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    return config_mod.validate(cfg)


def _family(cfg: config_mod.RunConfig, electrons: int):
    """(specs, ids, grid) for the configured family."""
    grid = cfg.grid_for(electrons)
    f = cfg.family
    if f.source == "random":
        specs = sample_fourier_family(f.seed, f.count, f.strength, grid, f.num_terms)
    else:
        specs = load_preset_family(f.preset or ("one_electron" if electrons == 1 else "two_electron"))
    ids = [str(i) for i in range(1, len(specs) + 1)]
    return specs, ids, grid


def _outdir(cfg: config_mod.RunConfig, name: str) -> Path:
    path = cfg.output_dir() / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _figure_path(directory: Path, name: str, cfg) -> Path:
    return directory / f"{name}.{cfg.output.figure_format}"


def cmd_potentials(cfg) -> int:
    specs, ids, grid = _family(cfg, 1)
    out = _outdir(cfg, "potentials")
    curves = {}
    with open(out / "index.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["system", "ground_energy", "file"])
        for sid, spec in zip(ids, specs):
            potential = fourier_potential(spec, grid)
            energy, _ = solver1e.ground_state(potential)
            shifted = shift_to_ground_energy(potential, energy)
            name = f"potential_{sid}.txt"
            write_potential(out / name, shifted)
            writer.writerow([sid, f"{energy:.12e}", name])
            curves[sid] = (grid.points, shifted.values)
    plotting.potentials_figure(curves, _figure_path(out, "potentials", cfg))
    print(f"wrote {len(ids)} potentials to {out}")
    return 0


def cmd_solve1e(cfg) -> int:
    specs, ids, grid = _family(cfg, 1)
    systems = experiments.solve_family(specs, grid, electrons=1, ids=ids, workers=cfg.threads)
    out = _outdir(cfg, "solve1e")
    with open(out / "energies.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["system", "energy"])
        for s in systems:
            writer.writerow([s.system_id, f"{s.energy:.12e}"])
            solver1e.write_wavefunction(out / f"wavefunction_{s.system_id}.txt", s.state)
            solver2e.write_density(out / f"density_{s.system_id}.txt", s.density)
    print(f"solved {len(systems)} one-electron systems into {out}")
    return 0


def cmd_solve2e(cfg) -> int:
    specs, ids, grid = _family(cfg, 2)
    interacting = cfg.solver.interacting
    systems = experiments.solve_family(
        specs, grid, electrons=2, interacting=interacting, spin=cfg.solver.spin, ids=ids, workers=cfg.threads
    )
    out = _outdir(cfg, "solve2e")
    with open(out / "energies.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["system", "energy", "interacting", "spin"])
        for s in systems:
            writer.writerow([s.system_id, f"{s.energy:.12e}", interacting, cfg.solver.spin])
            solver2e.write_density(out / f"density_{s.system_id}.txt", s.density)
            solver2e.write_wavefunction_2e(out / f"wavefunction2e_{s.system_id}.txt", s.state)
    print(f"solved {len(systems)} two-electron systems into {out}")
    return 0


def cmd_propagate(cfg, only=None) -> int:
    specs, ids, grid = _family(cfg, 1)
    if only:
        missing = sorted(set(only) - set(ids))
        if missing:
            raise UsageError(f"unknown system id(s): {', '.join(missing)}")
    pconf = cfg.propagation_config()
    out = _outdir(cfg, "propagate")
    for sid, spec in zip(ids, specs):
        if only and sid not in only:
            continue
        potential = fourier_potential(spec, grid)
        _, psi = solver1e.ground_state(potential)
        traj = propagate(psi, potential, pconf)
        write_trajectory(out / f"system_{sid}", traj)
        print(f"system {sid}: {len(traj)} snapshots, max |norm-1| = {abs(traj.norms - 1).max():.2e}")
    return 0


def _report_family(run, out: Path, name: str, cfg) -> int:
    summary = experiments.write_family_run(run, out, name)
    fit = run.fit
    plotting.distance_figure(run.records, _figure_path(out, name, cfg), fit.slope if fit else None)
    if fit is None:
        print(f"{name}: slope undefined (no non-zero wavefunction distances)")
    else:
        print(f"{name}: slope = {fit.slope:.4f} ({summary['convention']}, {fit.count} pairs, rms {fit.rms_residual:.3g})")
    return 0


def cmd_distances(cfg, electrons: int) -> int:
    specs, ids, grid = _family(cfg, electrons)
    run = experiments.run_ground_state_family(
        specs,
        grid,
        electrons=electrons,
        interacting=cfg.solver.interacting,
        convention=cfg.metrics.convention or (UNIT if electrons == 2 else "natural"),
        spin=cfg.solver.spin,
        ids=ids,
        workers=cfg.threads,
    )
    return _report_family(run, _outdir(cfg, "distances"), "distances", cfg)


def cmd_experiment(cfg, which: str) -> int:
    electrons, interacting, default_convention = EXPERIMENTS[which]
    convention = cfg.metrics.convention or default_convention
    specs, ids, grid = _family(cfg, electrons)
    if which == "fig2":
        run = experiments.run_dynamics_family(
            specs,
            grid,
            reference=cfg.propagation.reference,
            config=cfg.propagation_config(),
            convention=convention,
            ids=ids,
            workers=cfg.threads,
        )
        out = _outdir(cfg, which)
        summary = experiments.write_dynamics_run(run, out, which)
        plotting.trails_figure(run.trails, _figure_path(out, which, cfg), run.ground_state_fit.slope)
        tri = summary["lower_triangle"]
        print(
            f"fig2: ground-state slope = {summary['slope']:.4f}; below-line fraction = {tri['below_fraction']:.3f}; "
            f"mean D_n/D_psi = {tri['mean_ratio']:.3f}; upper-triangle count = {tri['upper_count']}"
        )
        return 0
    run = experiments.run_ground_state_family(
        specs,
        grid,
        electrons=2,
        interacting=interacting,
        convention=convention,
        spin=cfg.solver.spin,
        ids=ids,
        workers=cfg.threads,
    )
    return _report_family(run, _outdir(cfg, which), which, cfg)


def cmd_plot(path: Path, output: Path | None, convention: str | None, slope: float | None) -> int:
    try:
        records = read_records(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read records: {exc}") from exc
    if convention:
        mode = "unit_normalized" if convention == "unit" else convention
        records = [r for r in records if r.convention.mode == mode]
    elif records:
        records = [r for r in records if r.convention == records[0].convention]
    if not records:
        log.warning("no records to plot in %s; writing empty axes", path)
    elif slope is None:
        try:
            slope = fit_slope_through_origin(records).slope
        except ValueError as exc:
            log.warning("no fitted line: %s", exc)
    output = output or path.with_suffix(".svg")
    plotting.distance_figure(records, output, slope)
    print(f"wrote {output}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")

    try:
        if args.command == "plot":
            return cmd_plot(args.records, args.output, args.convention, args.slope)
        cfg = _apply_overrides(config_mod.load(args.config), args)
        if args.command == "potentials":
            return cmd_potentials(cfg)
        if args.command == "solve1e":
            return cmd_solve1e(cfg)
        if args.command == "solve2e":
            return cmd_solve2e(cfg)
        if args.command == "propagate":
            return cmd_propagate(cfg, args.system)
        if args.command == "distances":
            return cmd_distances(cfg, args.electrons)
        if args.command == "experiment":
            return cmd_experiment(cfg, args.which)
    except (config_mod.ConfigError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        solver1e.EigensolverError,
        solver2e.CapacityError,
        experiments.ExperimentError,
        RuntimeError,
    ) as exc:
        print(f"error: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
