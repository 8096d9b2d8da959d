"""Grid-refinement study: does the coupled scheme converge?

Repeats the impulse experiment on fluid grids of 16^3, 32^3 and 64^3 points
with the time step proportional to the mesh width, samples the shell at 50
common times, and compares adjacent runs on the common 160 x 6 subsampling
grid. The order estimate

    r = log2( |X_mid - X_coarse| / |X_fine - X_mid| )

uses space-time norms over the second half of the simulated interval; first
order (r ~ 1) is the expectation for this scheme.

Takes a couple of minutes at the default sizes (the 64^3 run dominates).
Pass --quick for a two-run 16/32 ladder that skips the rate estimate.
"""

import sys

from ibshell.harness import convergence_rates, run_convergence_study

quick = "--quick" in sys.argv
kwargs = dict(N_list=(16, 32), dt_list=(2e-8, 1e-8)) if quick else {}

study = run_convergence_study(
    out_dir="study_out",
    progress=lambda r: print(f"  finished {r.label} ({r.wall_seconds:.0f} s)"),
    **kwargs,
)

print("\nspace-time norms of adjacent-run differences:")
for fine, coarse, p, val in study.pair_norms():
    print(f"  |{fine} - {coarse}|_{p} = {val:.4e}")

if len(study.records) >= 3:
    print("\nobserved convergence rates:")
    for p in (1, 2, "inf"):
        r = convergence_rates(*study.records[:3], p)
        print(f"  L{p}: r = {r:.3f}")

print("\nCSV tables in study_out/: study_runs.csv, study_norms.csv, "
      "study_rates.csv, study_reldiff.csv")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("(matplotlib not installed; skipping the E(t) plot)")
else:
    fig, ax = plt.subplots(figsize=(6, 4))
    times = study.records[0].times * 1e6
    for j in range(1, len(study.records)):
        E = study.relative_difference_series(j - 1, j, 2)
        ax.semilogy(times, E,
                    label=f"{study.records[j - 1].label} vs {study.records[j].label}")
    ax.axvline(times[-1] / 2, color="gray", lw=0.8, ls="--")
    ax.set_xlabel("t (us)")
    ax.set_ylabel("relative difference E(t), L2")
    ax.set_title("adjacent-run relative differences")
    ax.legend()
    fig.tight_layout()
    fig.savefig("study_out/reldiff.png", dpi=140)
    print("plot: study_out/reldiff.png")
