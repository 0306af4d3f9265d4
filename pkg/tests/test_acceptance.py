"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line through ``acceptance_report`` (printed in
the "acceptance criteria" section of the pytest summary) before asserting.
"""

import itertools
import json

import numpy as np
import pytest
from oracles import box_levels, brute_force_pair_ground_state, richardson_ratio

from qmetrics import Grid, Potential, cli, load_preset_family
from qmetrics.config import OUTPUT_ENV_VAR
from qmetrics.dynamics import PropagationConfig, propagate
from qmetrics.experiments import run_ground_state_family
from qmetrics.metrics import NATURAL, UNIT, MetricConvention, density_distance, to_unit, wavefunction_distance
from qmetrics.potentials import fourier_potential, sample_fourier_family
from qmetrics.solver1e import ground_state, lowest_k
from qmetrics.solver2e import (
    density_from_1e,
    density_from_2e,
    ground_state_interacting,
    ground_state_noninteracting,
)


@pytest.fixture(autouse=True)
def _no_env(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV_VAR, raising=False)


@pytest.fixture(scope="module")
def cli_runs(tmp_path_factory):
    """Run the three experiments through the command line once for this module."""
    root = tmp_path_factory.mktemp("experiments")
    summaries = {}
    for which in ("fig2", "fig3", "fig4"):
        assert cli.main(["experiment", which, "-o", str(root)]) == 0
        summaries[which] = json.loads((root / which / "summary.json").read_text())
    return root, summaries


def test_criterion_1_interacting_slope(cli_runs, acceptance_report):
    _, s = cli_runs
    slope = s["fig3"]["slope"]
    ok = abs(slope - 1.06) <= 0.10 and s["fig3"]["pairs"] == 45 and s["fig3"]["convention"] == UNIT
    acceptance_report(1, ok, f"fig3 unit-normalized slope {slope:.4f}, target 1.06 +/- 0.10")
    assert ok


def test_criterion_2_noninteracting_slope(cli_runs, fig3_run, fig4_run, acceptance_report):
    _, s = cli_runs
    slope3, slope4 = s["fig3"]["slope"], s["fig4"]["slope"]
    changes = [
        max(abs(a.D_psi - b.D_psi) / b.D_psi, abs(a.D_n - b.D_n) / b.D_n)
        for a, b in zip(fig3_run.records, fig4_run.records)
    ]
    in_band = abs(slope4 - 0.97) <= 0.10
    points_differ = max(changes) > 0.01
    trend_close = abs(slope3 - slope4) < 0.15
    ok = in_band and points_differ and trend_close
    acceptance_report(
        2,
        ok,
        f"fig4 slope {slope4:.4f} (target 0.97 +/- 0.10: {in_band}); "
        f"max pair change {max(changes):.3f} (>1%: {points_differ}); "
        f"|fig3 - fig4| = {abs(slope3 - slope4):.4f} (<0.15: {trend_close})",
    )
    assert ok


def test_criterion_3_one_electron_line(grid1e, acceptance_report):
    run = run_ground_state_family(load_preset_family("1e"), grid1e, electrons=1, convention=NATURAL)
    fit = run.fit
    max_dn = max(r.D_n for r in run.records)
    ok = abs(fit.slope - 1.55) <= 0.15 and fit.rms_residual < 0.1 * max_dn
    acceptance_report(
        3, ok, f"1e natural slope {fit.slope:.4f} (target 1.55 +/- 0.15), rms {fit.rms_residual:.4f} vs max D_n {max_dn:.4f}"
    )
    assert ok


def test_criterion_4_lower_triangle(cli_runs, acceptance_report):
    _, s = cli_runs
    fig2 = s["fig2"]
    static = fig2["ground_state_fits"][NATURAL]
    tri = fig2["lower_triangle"]
    band = static["max_abs_residual"]
    checks = {
        "a": fig2["initial_line_deviation"] <= band,
        "b": tri["below_fraction"] > 0.5,
        "c": tri["upper_count"] == 0 and np.isclose(tri["upper_tolerance"], 3 * static["rms_residual"]),
        "d": tri["mean_ratio"] < fig2["slope"],
    }
    ok = fig2["field_strength"] == 0.01 and all(checks.values())
    acceptance_report(
        4,
        ok,
        f"(a) t=0 deviation {fig2['initial_line_deviation']:.4f} <= band {band:.4f}: {checks['a']}; "
        f"(b) below fraction {tri['below_fraction']:.3f}: {checks['b']}; "
        f"(c) upper count {tri['upper_count']}: {checks['c']}; "
        f"(d) mean D_n/D_psi {tri['mean_ratio']:.4f} < slope {fig2['slope']:.4f}: {checks['d']}",
    )
    assert ok


def test_criterion_5_solver_oracles(acceptance_report):
    g = Grid(10.0, 401)  # dx = 0.05
    e_harm, _ = ground_state(Potential(g, 0.5 * g.points**2))
    box = Grid(15.0, 301)
    e_box, _ = ground_state(Potential(box, np.zeros(box.num_points)))

    v2 = fourier_potential(load_preset_family("2e")[0], Grid(15.0, 151))
    levels = lowest_k(v2, 2).energies
    e_non, _ = ground_state_noninteracting(v2, "triplet")

    small = Grid(4.0, 21)
    v_small = 0.5 * small.points**2 + 0.3 * np.sin(1.3 * small.points)
    e_ref, _ = brute_force_pair_ground_state(small.points, v_small, "antisymmetric")
    e_int, _ = ground_state_interacting(Potential(small, v_small), "triplet")
    e_ref_s, _ = brute_force_pair_ground_state(small.points, v_small, "symmetric")
    e_int_s, _ = ground_state_interacting(Potential(small, v_small), "singlet")

    errs = {
        "harmonic": abs(e_harm - 0.5),
        "box_rel": abs(e_box - np.pi**2 / 1800) / (np.pi**2 / 1800),
        "e0+e1": abs(e_non - levels.sum()),
        "brute": max(abs(e_int - e_ref), abs(e_int_s - e_ref_s)),
    }
    assert box_levels(30.0, 1) == pytest.approx(np.pi**2 / 1800)
    ok = errs["harmonic"] < 1e-3 and errs["box_rel"] < 0.01 and errs["e0+e1"] < 1e-10 and errs["brute"] < 1e-9
    acceptance_report(5, ok, ", ".join(f"{k} err {v:.2e}" for k, v in errs.items()))
    assert ok


def test_criterion_6_propagation_invariants(grid1e, acceptance_report):
    v = fourier_potential(load_preset_family("1e")[0], grid1e)
    _, psi = ground_state(v)
    traj = propagate(psi, v, PropagationConfig(field_strength=0.01, dt=0.01, total_time=10.0))
    norm_drift = float(np.abs(traj.norms - 1).max())

    still = propagate(psi, v, PropagationConfig(field_strength=0.0, dt=0.01, total_time=10.0))
    n0 = still.densities[0].values
    density_drift = max(grid1e.spacing * np.abs(n.values - n0).sum() for n in still.densities)

    finals = []
    for dt in (0.04, 0.02, 0.01):
        cfg = PropagationConfig(field_strength=0.01, dt=dt, total_time=4.0, record_stride=int(round(4.0 / dt)))
        finals.append(propagate(psi, v, cfg).states[-1].amplitudes)
    ratio = richardson_ratio(finals)

    ok = norm_drift < 1e-10 and density_drift < 1e-8 and 3.5 <= ratio <= 4.5
    acceptance_report(
        6, ok, f"norm drift {norm_drift:.2e}, eps=0 density drift {density_drift:.2e}, dt ratio {ratio:.3f}"
    )
    assert ok


def test_criterion_7_metric_axioms(acceptance_report):
    grid = Grid(15.0, 301)
    specs = sample_fourier_family(2718, 40, 0.1, grid)
    states = [ground_state(fourier_potential(s, grid))[1] for s in specs]
    dens = [density_from_1e(p) for p in states]

    grid2 = Grid(10.0, 61)
    specs2 = sample_fourier_family(3141, 8, 0.1, grid2)
    states2 = [ground_state_interacting(fourier_potential(s, grid2))[1] for s in specs2]
    dens2 = [density_from_2e(p) for p in states2]

    rng = np.random.default_rng(0)
    triples = [tuple(rng.choice(len(states), 3, replace=False)) for _ in range(100)]
    triples += list(itertools.permutations(range(4), 3))
    worst = {"symmetry": 0.0, "negative": 0.0, "identity": 0.0, "triangle": 0.0}

    def check(ps, ns, i, j, k, conv):
        dpsi = lambda a, b: wavefunction_distance(ps[a], ps[b], conv)
        dn = lambda a, b: density_distance(ns[a], ns[b], conv)
        for d in (dpsi, dn):
            worst["symmetry"] = max(worst["symmetry"], abs(d(i, j) - d(j, i)))
            worst["negative"] = max(worst["negative"], -min(d(i, j), d(j, k), d(i, k)))
            worst["identity"] = max(worst["identity"], d(i, i), d(j, j))
            worst["triangle"] = max(worst["triangle"], d(i, k) - d(i, j) - d(j, k))

    for t in triples[:100]:
        check(states, dens, *t, MetricConvention(NATURAL, 1))
    for t in triples[100:]:
        check(states2, dens2, *t, MetricConvention(NATURAL, 2))

    phase_err = 0.0
    conv_err = 0.0
    for i, j, _ in triples[:20]:
        base = wavefunction_distance(states[i], states[j])
        for theta in (0.4, 2.0, -1.3):
            phase_err = max(phase_err, abs(wavefunction_distance(states[i].with_phase(theta), states[j]) - base))
        unit = wavefunction_distance(states[i], states[j], MetricConvention(UNIT, 1))
        conv_err = max(conv_err, abs(unit - to_unit(base, "psi", 1)), abs(unit * np.sqrt(2) - base))
    for i, j, _ in triples[100:]:
        nat = density_distance(dens2[i], dens2[j], MetricConvention(NATURAL, 2))
        unit = density_distance(dens2[i], dens2[j], MetricConvention(UNIT, 2))
        conv_err = max(conv_err, abs(unit * 4 - nat))

    ok = (
        worst["symmetry"] == 0.0
        and worst["negative"] <= 0.0
        and worst["identity"] < 1e-10
        and worst["triangle"] < 1e-12
        and phase_err < 1e-12
        and conv_err < 1e-12
    )
    acceptance_report(
        7,
        ok,
        f"{len(triples)} solved triples; worst symmetry {worst['symmetry']:.1e}, identity {worst['identity']:.1e}, "
        f"triangle excess {worst['triangle']:.1e}; phase {phase_err:.1e}; conversion {conv_err:.1e}",
    )
    assert ok


def test_criterion_8_determinism(cli_runs, tmp_path, acceptance_report):
    first_root, _ = cli_runs
    mismatched = []
    compared = 0
    for which in ("fig2", "fig3", "fig4"):
        assert cli.main(["experiment", which, "-o", str(tmp_path)]) == 0
        for csv_path in sorted((first_root / which).glob("*.csv")):
            compared += 1
            if csv_path.read_bytes() != (tmp_path / which / csv_path.name).read_bytes():
                mismatched.append(f"{which}/{csv_path.name}")
    ok = compared > 0 and not mismatched
    acceptance_report(8, ok, f"{compared} CSVs compared across two runs, mismatched: {mismatched or 'none'}")
    assert ok
