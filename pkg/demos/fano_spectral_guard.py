#!/usr/bin/env python3
"""Push the Fano-type family past the spectral gap and watch the guard fire.

The linearization at parameter t is Delta' + t, which stops being invertible
once t crosses the smallest nonzero eigenvalue of -Delta' (about pi^2 here).
The driver measures that gap before every step and aborts instead of handing
Newton a singular system.
"""
import numpy as np

from torusma import (Family, FourierTerm, PeriodicGrid, fourier_field,
                     identity_metric, run_path, spectral_gap)

grid = PeriodicGrid(1, 16)
print(f"flat-torus spectral gap: {spectral_gap(identity_metric(grid)):.6f} "
      f"(pi^2 = {np.pi ** 2:.6f})")

F = fourier_field(grid, [FourierTerm("cos", (1, 0), 0.05)])
path = run_path(grid, F, Family.FANO, np.linspace(0.0, 15.0, 31))

print(f"records completed: {len(path.records)} "
      f"(last t = {path.records[-1].t:.2f})")
print(f"aborted at t = {path.failed_t}: {path.failure}")
