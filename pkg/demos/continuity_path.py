#!/usr/bin/env python3
"""March the negative-first-Chern-class family from t=0 to t=1.

Each step warm-starts Newton from the previous potential; the printed table
tracks the maximum-principle bound sup|phi_t| <= t sup|F| along the way.
"""
import numpy as np

from torusma import Family, FourierTerm, PeriodicGrid, fourier_field, run_path

grid = PeriodicGrid(1, 64)
F = fourier_field(grid, [FourierTerm("cos", (1, 0), 0.5)])
path = run_path(grid, F, Family.NEG_C1)

sup_F = float(np.abs(F.values).max())
print(f"{'t':>6} {'iters':>5} {'residual':>10} {'sup|phi|':>10} "
      f"{'t*sup|F|':>10} {'min eig':>8}")
for rec in path.records:
    sup_abs = max(rec.sup_phi, -rec.inf_phi)
    print(f"{rec.t:6.3f} {rec.newton_iters:5d} {rec.residual_inf:10.2e} "
          f"{sup_abs:10.6f} {rec.t * sup_F:10.6f} {rec.min_eig_gprime:8.4f}")

print("path completed" if path.completed
      else f"path failed at t={path.failed_t}: {path.failure}")
