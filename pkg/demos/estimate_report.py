#!/usr/bin/env python3
"""Run the full estimate-verification report on a continuity path.

Solves the c1 < 0 family, then measures every implemented bound and identity
(maximum principle, metric equivalence, log-trace inequality, energy
identity, third-derivative stability) on the resulting fields.
"""
from torusma import (Family, FourierTerm, PeriodicGrid, build_report,
                     fourier_field, run_path)

grid = PeriodicGrid(1, 32)
F = fourier_field(grid, [FourierTerm("cos", (1, 0), 0.5),
                         FourierTerm("sin", (0, 1), 0.3, 0.4)])
path = run_path(grid, F, Family.NEG_C1)
report = build_report(path, F)
print(report.to_table())
print()
print("all gated entries pass" if report.all_passed()
      else "some entries FAILED")
