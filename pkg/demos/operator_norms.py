"""
Operator norms on l_p spaces
============================

Power iteration against the grid oracle, and the bracket every estimate carries.
"""
from __future__ import annotations

import numpy as np

from bplab.opnorm import opnorm, opnorm_boyd, opnorm_bruteforce, riesz_thorin_upper
from bplab.spaces import QSLpSpace

rng = np.random.default_rng(0)
A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))

# the same 3x3 matrix measured on l_p for a few exponents
for p in (1.5, 2.0, 3.0):
    E = QSLpSpace.plain(3, p)
    est = opnorm(A, E)
    print(f"p={p}: [{est.lower:.10f}, {est.upper:.10f}] via {est.method}, "
          f"interpolation bound {riesz_thorin_upper(A, p):.4f}")

# two independent routes on a 2x2 matrix: multistart power iteration and a sphere grid
B = A[:2, :2]
E = QSLpSpace.plain(2, 3.0)
boyd = opnorm_boyd(B, E, starts=32)
grid = opnorm_bruteforce(B, E, resolution=400)
print(f"power iteration {boyd.lower:.12f}, grid {grid.lower:.12f}, difference {abs(boyd.lower - grid.lower):.1e}")

# a quotient space: l_3^3 modulo the line through (1, 1, 1)
Q = QSLpSpace(3, 3.0, np.eye(3), np.ones((3, 1)))
v = np.array([2.0, -1.0])
print("quotient norm of a class:", Q.norms(v))
