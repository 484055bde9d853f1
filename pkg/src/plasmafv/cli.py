"""Command-line driver.

Subcommands:

* ``run <config>`` -- run a scenario config to completion, writing the
  ledger, config round-trip, and optional snapshots to the output
  directory.
* ``dispersion <scenario>`` -- emit dispersion-oracle tables: for
  ``twostream`` a dv-refinement ladder of discrete roots against the
  continuous one, for ``xmode`` the real branch frequencies over a
  wavenumber scan.
* ``oracle volterra <config>`` -- emit the Green-kernel reference density
  and mode energy for the config's beam parameters.
* ``plot <series-file>`` -- render ledger/oracle column text as a PNG
  line plot.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np


def _cmd_run(args) -> int:
    from . import scenarios
    try:
        cfg = scenarios.load_config(args.config)
        if args.order:
            cfg.order = args.order
        if args.limiter:
            cfg.limiter = args.limiter
        if args.threads:
            cfg.threads = args.threads
        if args.snapshot_every is not None:
            cfg.snapshot_every = args.snapshot_every
        if args.t_end is not None:
            cfg.t_end = args.t_end
        cfg.limiter_choice           # validate
        cfg.grid()
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outdir = args.output_dir or (cfg.scenario + "_out")
    try:
        result = scenarios.run(cfg, output_dir=outdir, progress=args.verbose)
    except (RuntimeError, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    print(f"completed {result.steps} steps -> {outdir}/ledger.txt")
    return 0


def _cmd_dispersion(args) -> int:
    from . import lintheory
    if args.scenario == "twostream":
        k = 2 * np.pi / args.length
        problem = lintheory.two_stream_problem(k, args.v_drift)
        try:
            cont = lintheory.two_stream_root(problem)
        except RuntimeError as exc:
            print(f"numerical abort: {exc}", file=sys.stderr)
            return 3
        print(f"# continuous root: {cont.real:.12g} {cont.imag:+.12g}i")
        print("# dv  re(root)  im(root)  |root - continuous|")
        for dv in (0.75, 0.375, 0.1875, 0.09375):
            root = lintheory.discrete_two_stream_root(problem, dv)
            print(f"{dv:.6g} {root.real:.12g} {root.imag:.12g} "
                  f"{abs(root - cont):.6e}")
        return 0
    if args.scenario == "xmode":
        print("# k1  omega_branches...")
        for frac in np.linspace(0.2, 3.0, 15):
            k = frac * 2 * np.pi / args.length
            roots = lintheory.xmode_dispersion_roots(k, args.B0, args.beta)
            print(f"{k:.8g} " + " ".join(f"{w:.10g}" for w in roots))
        return 0
    print(f"config error: unknown dispersion scenario {args.scenario!r}",
          file=sys.stderr)
    return 2


def _cmd_oracle(args) -> int:
    from . import lintheory, scenarios
    if args.kind != "volterra":
        print(f"config error: unknown oracle {args.kind!r}", file=sys.stderr)
        return 2
    try:
        cfg = scenarios.load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    t_end = args.t_end or cfg.t_end
    dt = args.dt or cfg.dt
    times = np.arange(0.0, t_end + 0.5 * dt, dt)
    K, M = lintheory.two_stream_kernels(cfg.k1, cfg.v_drift,
                                        cfg.amplitude, times)
    nh = lintheory.volterra_solve(K, M, dt)
    es = lintheory.mode_electrostatic_energy(nh, cfg.k1, cfg.length)
    print("# t  re_nhat  im_nhat  es_energy")
    for i, t in enumerate(times):
        print(f"{t:.10g} {nh[i].real:.12e} {nh[i].imag:.12e} {es[i]:.12e}")
    return 0


def _cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    try:
        with open(args.series) as fh:
            header = fh.readline().lstrip("#").split()
        data = np.loadtxt(args.series, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        print(f"config error: cannot read series file: {exc}",
              file=sys.stderr)
        return 2
    if data.shape[1] != len(header):
        header = [f"col{i}" for i in range(data.shape[1])]
    cols = args.columns.split(",") if args.columns else header[2:3] or header[1:2]
    xname = header[1] if len(header) > 1 and header[0] == "step" else header[0]
    xi = header.index(xname)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in cols:
        if name not in header:
            print(f"config error: no column {name!r} in {args.series}",
                  file=sys.stderr)
            return 2
        ax.plot(data[:, xi], data[:, header.index(name)], label=name)
    if args.logy:
        ax.set_yscale("log")
    ax.set_xlabel(xname)
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    out = args.output or (os.path.splitext(args.series)[0] + ".png")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plasmafv",
        description="finite-volume kinetic plasma solver and linear-theory "
                    "oracles")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario config")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--order", type=int, choices=(2, 4), default=0)
    p.add_argument("--limiter",
                   help="extrema | minmod:<b> | none")
    p.add_argument("--snapshot-every", type=int, default=None, metavar="K")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("dispersion", help="emit dispersion-oracle tables")
    p.add_argument("scenario", choices=("twostream", "xmode"))
    p.add_argument("--length", type=float, default=25.0)
    p.add_argument("--v-drift", type=float, default=4.0)
    p.add_argument("--B0", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=0.05)
    p.set_defaults(func=_cmd_dispersion)

    p = sub.add_parser("oracle", help="emit semi-analytic reference series")
    p.add_argument("kind", choices=("volterra",))
    p.add_argument("config")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("plot", help="plot ledger/series columns to PNG")
    p.add_argument("series")
    p.add_argument("-o", "--output")
    p.add_argument("--columns", help="comma-separated column names")
    p.add_argument("--logy", action="store_true")
    p.set_defaults(func=_cmd_plot)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
