"""
Truncated universal families
============================

Cyclic pieces of the regular representation picked from near-maximizers of
probe functions, and the gap ||pi(f)|| - ||Pi(f)|| as the depth grows.
"""
from __future__ import annotations

from bplab.groups import dihedral_group
from bplab.pseudofunctions import build_universal_family, pf_norm, pi_isometry_gap, random_probe
from bplab.representation import left_regular

G = dihedral_group(3)
lam = left_regular(G, 3.0)
probes = [random_probe(G, 1, "demo", k) for k in range(2)]
print("||lambda(f)|| for the probes:", [round(pf_norm(lam, f).lower, 8) for f in probes])

for r_max in (1, 2, 4, 8):
    fam = build_universal_family(lam, probes, r_max)
    gaps = [res.details["gap"] for res in pi_isometry_gap(fam, probes)]
    dims = [b.rep.dim for b in fam.blocks]
    print(f"r_max={r_max}: block dims {dims}, gaps {[f'{g:.2e}' for g in gaps]} (allowed up to {1 / r_max:.3f})")

# a function that is not a probe: the family norm never exceeds the base norm
other = random_probe(G, 2, "other")
fam = build_universal_family(lam, probes, 4)
print("non-probe gap:", pi_isometry_gap(fam, [other])[0].details["gap"])
