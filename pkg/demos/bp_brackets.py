"""
Brackets for the B_p norm
=========================

Lower ends from a witness f (|<f, u>| / ||Pi(f)||), upper ends from explicit
sums of coefficient functions; at p = 2 on abelian groups they meet the
Fourier value.
"""
from __future__ import annotations

import numpy as np

from bplab.bp import BpElement, bp_bracket, bp_norm_lower, cb_functional_check, fourier_oracle_p2
from bplab.groups import cyclic_group
from bplab.representation import left_regular

G = cyclic_group(4)
rng = np.random.default_rng(3)
u = BpElement(G, rng.standard_normal(4))

# p = 2: the bracket against the l_1 norm of the Fourier coefficients
br = bp_norm_lower(left_regular(G, 2.0), u)
print(f"p=2 bracket [{br.lower:.8f}, {br.upper:.8f}], Fourier value {fourier_oracle_p2(u):.8f}")

# other exponents have no closed form; the bracket is the answer
for p in (1.5, 3.0):
    br = bp_bracket(left_regular(G, p), u, search=True)
    print(f"p={p} bracket [{br.lower:.8f}, {br.upper:.8f}] ({br.upper_method})")

# matrix levels of u seen as a functional do not grow
res = cb_functional_check(left_regular(cyclic_group(2), 3.0), BpElement(cyclic_group(2), [1.0, -0.5]), n_max=2)
print(f"||u_n|| >= {res.lhs:.8f}, ||u_1|| <= {res.details['u_1_upper']:.8f}: {res.verdict.value}")
