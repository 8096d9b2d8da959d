"""Command-line entry point.

Subcommands:

  run             advance the model problem and write snapshots
  study           grid-refinement convergence study with CSV reports
  plate-check     flat-limit equivalences of the force operator
  kernel-check    delta-kernel invariants
  geometry-check  convergence order of the discrete surface geometry
  render          displacement graymap (PGM) from a snapshot file

Check subcommands print one line per assertion and exit nonzero when any
fails.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, io
from .simulation import ModelConfig, Simulation


def _load_config(args) -> ModelConfig:
    cfg = ModelConfig.from_file(args.config) if args.config else ModelConfig()
    overrides = {}
    if getattr(args, "n", None) is not None:
        overrides = {"N": int(args.n), "n1": None, "n2": None}
    if getattr(args, "dt", None) is not None:
        overrides["dt"] = float(args.dt)
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    steps = args.steps if args.steps is not None else int(round(cfg.T0 / cfg.dt))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim = Simulation(cfg)
    params = io.config_param_block(cfg)
    cadence = cfg.snapshot_every
    written = []

    def snap(tag):
        path = out / f"snapshot_{tag}.ibsh"
        io.write_snapshot(path, sim.X, sim.u, sim.p, sim.t, cfg.dt, params)
        written.append(path)

    for k in range(1, steps + 1):
        sim.step()
        if cadence > 0 and k % cadence == 0:
            snap(f"{k:06d}")
    snap("final")
    drift = np.abs(sim.X - sim.grid.X0).max()
    print(f"ran {steps} steps to t = {sim.t:.6e} s on N = {cfg.N}; "
          f"max |X - X0| = {drift:.3e} cm")
    for p in written:
        print(f"wrote {p}")
    return 0


def _parse_ladder(text, cast):
    return tuple(cast(tok) for tok in text.split(",") if tok.strip())


def _cmd_study(args) -> int:
    base = ModelConfig.from_file(args.config) if args.config else ModelConfig()
    N_list = _parse_ladder(args.n, int) if args.n else harness.STUDY_N
    if args.dt:
        dt_list = _parse_ladder(args.dt, float)
    else:
        dt_list = tuple(3.2e-7 / N for N in N_list)
    study = harness.run_convergence_study(
        base, N_list=N_list, dt_list=dt_list, out_dir=args.out,
        progress=lambda rec: print(
            f"run {rec.label}: {len(rec.times)} samples, "
            f"{rec.wall_seconds:.1f} s wall"
        ),
    )
    norms = [args.norm] if args.norm else ["1", "2", "inf"]
    for fine, mid, coarse in zip(
        study.records, study.records[1:], study.records[2:]
    ):
        for p in norms:
            pval = int(p) if p in ("1", "2") else "inf"
            r = harness.convergence_rates(fine, mid, coarse, pval)
            print(f"rate L{p}: {r:.4f}   ({fine.label} | {mid.label} | "
                  f"{coarse.label})")
    for path in study.csv_paths:
        print(f"wrote {path}")
    return 0


def _run_checks(results) -> int:
    ok = True
    for r in results:
        print(r.line())
        ok = ok and r.passed
    return 0 if ok else 1


def _cmd_render(args) -> int:
    snap = io.read_snapshot(args.snapshot)
    cfg = io.params_to_config(snap.params)
    from .geometry import build_geometry
    from .shell import decompose_displacement
    from .simulation import build_model_shell

    geom = build_geometry(build_model_shell(cfg))
    omega = decompose_displacement(snap.X, geom).omega
    out = Path(args.out) if args.out else Path(args.snapshot).with_suffix(".pgm")
    io.write_displacement_map(omega, out, vmax=args.vmax)
    print(f"wrote {out} ({omega.shape[0]}x{omega.shape[1]}, "
          f"max |omega| = {np.abs(omega).max():.3e} cm)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ibshell", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="advance the model problem")
    run.add_argument("--config", help="flat key=value config file")
    run.add_argument("--out", default="out", help="snapshot directory")
    run.add_argument("--n", type=int, help="fluid grid points per side")
    run.add_argument("--dt", type=float, help="time step (s)")
    run.add_argument("--steps", type=int, help="step count (default T0/dt)")
    run.set_defaults(func=_cmd_run)

    study = sub.add_parser("study", help="grid-refinement convergence study")
    study.add_argument("--config", help="flat key=value config file")
    study.add_argument("--out", default="study_out", help="CSV directory")
    study.add_argument("--n", help="comma-separated N ladder (default 16,32,64)")
    study.add_argument("--dt", help="comma-separated dt ladder (default 3.2e-7/N)")
    study.add_argument("--norm", choices=["1", "2", "inf"],
                       help="print only this norm's rates")
    study.set_defaults(func=_cmd_study)

    for name, fn in (
        ("plate-check", harness.plate_check),
        ("kernel-check", harness.kernel_check),
        ("geometry-check", harness.geometry_check),
    ):
        p = sub.add_parser(name, help=f"run the {name.replace('-', ' ')}")
        p.set_defaults(func=lambda args, fn=fn: _run_checks(fn()))

    render = sub.add_parser("render", help="graymap of a snapshot's displacement")
    render.add_argument("snapshot", help="snapshot file")
    render.add_argument("--out", help="output PGM path (default beside input)")
    render.add_argument("--vmax", type=float,
                        help="gray scale saturates at this |omega|")
    render.set_defaults(func=_cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
