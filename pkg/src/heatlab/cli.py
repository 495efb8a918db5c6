"""Command-line entry point.

Subcommands: ``constants``, ``kernel``, ``distance``, ``kato``, ``twist``,
``verify``.  All except ``constants`` take ``--config <path>`` (see
``config`` module for the grammar), ``--out <dir>`` and ``--seed <int>``.
Outputs are per-scenario CSV files plus ``manifest.txt`` (input echo,
versions, timings) and, for ``verify``, a human-readable ``verdict.txt``.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .discretize import Grid, assemble
from .experiments import verify_perturbed_bound, verify_sharp_bound
from .finsler import distance_1d, distance_dm_1d, distance_lattice_2d
from .heatkernel import eigendecompose, fourier_oracle, spectral_field
from .kato import (
    form_bound_report,
    kato_norm_curve,
    miyadera_ratio,
    sample_potential,
    weighted_l2_check,
)
from .reporting import Manifest, ensure_outdir, format_float_17, write_csv, write_text
from .symbols import SymbolSpec, sharp_constants
from .twist import TwistProfile, growth_fit


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="heatlab",
        description="heat kernels of higher-order elliptic operators at desk scale",
    )
    parser.add_argument("--version", action="version", version=f"heatlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print sigma_m and k_m")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", default=None)

    for name, help_text in (
        ("kernel", "sample heat kernel values"),
        ("distance", "Finsler / capped / lattice distances"),
        ("kato", "potential smallness checks"),
        ("twist", "twisted lower-bound sweep"),
        ("verify", "end-to-end Gaussian bound verdict"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=None)
        if name == "distance":
            p.add_argument("--method", choices=("exact1d", "lattice", "dM"), default=None)
            p.add_argument("--M", type=float, default=None)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args):
    if args.command == "constants":
        text = constants_table(args.m)
        print(text, end="")
        if args.out:
            ensure_outdir(args.out)
            write_text(os.path.join(args.out, "constants.txt"), text)
        return 0

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if cfg.scenario != args.command:
        cfg.scenario = args.command
    if getattr(args, "method", None) is not None:
        cfg.distance.method = args.method
    if getattr(args, "M", None) is not None:
        cfg.distance.M = args.M
    outdir = ensure_outdir(args.out)
    manifest = Manifest(cfg.scenario, cfg.seed)
    with open(args.config, "r", encoding="utf-8") as fh:
        manifest.echo("config", args.config)
        for line in fh.read().splitlines():
            manifest.echo("  |", line)

    runner = {
        "kernel": run_kernel,
        "distance": run_distance,
        "kato": run_kato,
        "twist": run_twist,
        "verify": run_verify,
    }[cfg.scenario]
    code = runner(cfg, outdir, manifest)
    manifest.write(outdir)
    return code


def constants_table(m):
    sc = sharp_constants(m)
    rows = [("m", float(sc.m)), ("sigma_m", sc.sigma_m), ("k_m", sc.k_m)]
    width = max(len(name) for name, _ in rows)
    return "".join(f"{name:<{width}}  {format_float_17(v)}\n" for name, v in rows)


def _operator_pieces(cfg, with_potential=True):
    o = cfg.operator
    spec = SymbolSpec.isotropic(o.m, o.n, o.a, domain=o.domain)
    grid = Grid.make(o.domain, o.grid_n)
    vvals = None
    if with_potential and o.potential is not None:
        vvals = sample_potential(o.potential, grid)
    return spec, grid, vvals


def run_kernel(cfg, outdir, manifest):
    spec, grid, vvals = _operator_pieces(cfg)
    manifest.start("assemble")
    op = assemble(spec, grid, potential=vvals)
    manifest.stop()
    manifest.start("eigendecompose")
    spectral = eigendecompose(op)
    manifest.stop()
    k = cfg.kernel
    manifest.start("kernel sweep")
    fld = spectral_field(spectral, op.m, k.t_list, list(zip(k.x_list, k.y_list)))
    rows = [(t, x, y, v, fld.method) for t, x, y, v in fld.rows()]
    if k.oracle:
        for t in k.t_list:
            for x, y in zip(k.x_list, k.y_list):
                rows.append((t, x, y, fourier_oracle(op.m, k.oracle_a, t, abs(y - x)),
                             "fourier-oracle"))
    manifest.stop()
    write_csv(os.path.join(outdir, "kernel.csv"), ("t", "x", "y", "K", "method"), rows)
    return 0


def run_distance(cfg, outdir, manifest):
    spec, grid, _ = _operator_pieces(cfg, with_potential=False)
    d = cfg.distance
    manifest.start(f"distance {d.method}")
    if d.method == "lattice":
        fldist = distance_lattice_2d(spec, d.source, npts=d.lattice_n)
        rows = [(p[0], p[1], v) for p, v in zip(fldist.points, fldist.values)]
        write_csv(os.path.join(outdir, "distance.csv"), ("x1", "x2", "d"), rows)
    else:
        rows = []
        for y1, y2 in zip(d.y1_list, d.y2_list):
            if d.method == "exact1d":
                val = distance_1d(spec, y1, y2)
            else:
                res = distance_dm_1d(spec, d.M, y1, y2)
                if not res.converged:
                    raise RuntimeError(f"capped-distance solver failed for ({y1}, {y2})")
                val = res.value
            rows.append((y1, y2, val))
        write_csv(os.path.join(outdir, "distance.csv"), ("x", "y", "d"), rows)
    manifest.stop()
    return 0


def run_kato(cfg, outdir, manifest):
    spec, grid, vvals = _operator_pieces(cfg)
    kc = cfg.kato
    if kc.vminus is not None:
        vminus = np.maximum(sample_potential(kc.vminus, grid), 0.0)
    elif vvals is not None:
        vminus = np.maximum(-vvals, 0.0)
    else:
        raise ValueError("kato scenario needs kato.vminus or operator.potential")
    manifest.start("assemble")
    op0 = assemble(spec, grid)
    manifest.stop()

    manifest.start("form bounds")
    fb = form_bound_report(op0, vminus, kc.eps_list)
    manifest.stop()
    write_csv(os.path.join(outdir, "form_bounds.csv"), ("eps", "c_eps"),
              list(zip(fb.epsilons, fb.c_eps)))

    manifest.start("resolvent curve")
    curve = kato_norm_curve(op0, vminus, kc.lambdas)
    rows = []
    for lam, kn in zip(curve.lambdas, curve.norms):
        status, wnorm, _ = weighted_l2_check(op0, vminus, lam)
        rows.append((lam, kn, wnorm if status != "vacuous" else 0.0))
    manifest.stop()
    write_csv(os.path.join(outdir, "kato_curve.csv"),
              ("lambda", "kato_norm", "weighted_l2_norm"), rows)

    manifest.start("miyadera")
    spectral = eigendecompose(op0)
    u = np.zeros(grid.node_count)
    u[grid.nearest_node(spec.domain.center())] = 1.0 / op0.mass
    ratios = [(kc.delta, miyadera_ratio(spectral, vminus, kc.delta, u)),
              (kc.delta / 2, miyadera_ratio(spectral, vminus, kc.delta / 2, u))]
    manifest.stop()
    write_csv(os.path.join(outdir, "miyadera.csv"), ("delta", "ratio"), ratios)
    return 0


def run_twist(cfg, outdir, manifest):
    spec, grid, vvals = _operator_pieces(cfg)
    tc = cfg.twist
    manifest.start("assemble")
    op0 = assemble(spec, grid)
    manifest.stop()
    profile = TwistProfile.from_expression(grid, tc.phi, spec.m)
    if not profile.feasible_symbol(spec, tc.M):
        raise ValueError("twist profile is infeasible for the symbol class at this M")
    lambdas = np.geomspace(tc.lambda_min, tc.lambda_max, tc.lambda_count)
    manifest.start("sweep")
    rep = growth_fit(op0, profile, lambdas)
    manifest.stop()
    rows = [(lam, k, fit) for lam, k, fit in zip(rep.lambdas, rep.k_values, rep.model(rep.lambdas))]
    write_csv(os.path.join(outdir, "twist.csv"), ("lambda", "k", "model_fit"), rows)
    verdict = "PASS" if rep.reliable and rep.kappa <= 1.1 * rep.k_m + 1e-6 else "FAIL"
    summary = "\n".join([
        f"kappa: {format_float_17(rep.kappa)}",
        f"k_m: {format_float_17(rep.k_m)}",
        f"intercept: {format_float_17(rep.intercept)}",
        f"fit_residual: {format_float_17(rep.fit_residual)}",
        f"eps_report: {format_float_17(rep.eps_report)}",
        f"verdict: {verdict}",
    ])
    write_text(os.path.join(outdir, "twist_summary.txt"), summary)
    if vvals is not None:
        op_v = assemble(spec, grid, potential=vvals)
        rep_v = growth_fit(op_v, profile, lambdas)
        write_csv(os.path.join(outdir, "twist_potential.csv"),
                  ("lambda", "k", "model_fit"),
                  list(zip(rep_v.lambdas, rep_v.k_values, rep_v.model(rep_v.lambdas))))
    return 0


def run_verify(cfg, outdir, manifest):
    manifest.start("pipeline")
    if cfg.verify.target == "perturbed":
        verdict = verify_perturbed_bound(cfg)
    else:
        verdict = verify_sharp_bound(cfg)
    manifest.stop()
    write_text(os.path.join(outdir, "verdict.txt"), verdict.render())
    write_csv(os.path.join(outdir, "verify_samples.csv"),
              ("t", "x", "y", "K", "d", "u", "bound"), verdict.samples)
    return 0 if verdict.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
