"""Walkthrough: continuation penalty solver vs a fixed-multiplier ADMM.

Both methods share the operators, the objective evaluators and the
initialization (the blurred image), and both run 200 iterations with the
same final coupling strength of 1000.  The penalty solver ramps its
parameter geometrically from 10, which lets early iterations take large
deconvolution steps; the ADMM baseline pays for its large fixed multiplier
with slow progress.  The printed table shows the gap opening.
"""

import pathlib

import numpy as np

from irpam import PenaltyConfig
from irpam.cli import write_trace
from irpam.deblur import (
    AdmmConfig,
    DeblurSpec,
    admm_baseline_run,
    degrade,
    run_experiment,
    smooth_random_field,
    snr,
)
from irpam.imageops import gaussian_kernel, tv_forward

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

truth = smooth_random_field(128, 128, corr_length=6.0, seed=2024)
kernel = gaussian_kernel(9, 2.0)
observed = degrade(truth, kernel, sigma=1e-3, seed=11)
spec = DeblurSpec.create(observed, kernel, lam=1e-4, q=0.5)

penalty = run_experiment(
    spec, PenaltyConfig(10.0, 1000.0, 1.1, 1e-6, 200), truth
)
admm = admm_baseline_run(
    spec, AdmmConfig(beta=1000.0, max_iters=200),
    observed, tv_forward(observed), truth,
)

print(f"blurred input: {snr(truth, observed):.2f} dB\n")
print(" iter   penalty-AM (dB)   ADMM (dB)")
for k in (0, 9, 24, 49, 99, 149, 199):
    print(f" {k + 1:4d}   {penalty.snr_curve[k][1]:12.2f}   "
          f"{admm.snr_curve[k][1]:9.2f}")
print(f"\nfinal: penalty-AM {penalty.final_snr:.2f} dB vs "
      f"ADMM {admm.final_snr:.2f} dB")
print(f"objective (original problem) at the end: "
      f"penalty-AM {penalty.trace[-1].psi:.6f} vs ADMM {admm.trace[-1].psi:.6f}")
print(f"constraint residual at the end: "
      f"penalty-AM {penalty.trace[-1].feas:.3e} vs ADMM {admm.trace[-1].feas:.3e}")

write_trace(penalty.trace, OUT / "compare_penalty.csv")
write_trace(admm.trace, OUT / "compare_admm.csv")
print(f"\nwrote compare_penalty.csv and compare_admm.csv under {OUT}/")
print("(the ADMM enforces the constraint through its dual and reaches "
      "feasibility tighter, but trades away restoration quality within "
      "the iteration budget)")
