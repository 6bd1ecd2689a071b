"""
Local densities and witnesses
=============================

The singular series is a sum over moduli q of normalised complete
exponential sums; it factors over primes into local densities, each of
which is a limit of solution counts modulo p^l.  We check both views
against each other exactly and then look for the nonsingular local points
that make each factor positive.
"""

from bihom.expsum import complete_sum
from bihom.forms import sys_a, sys_b
from bihom.local import (count_mod_q, euler_product, find_nonsingular_padic_zero, local_density,
                         local_factor, primes_up_to, singular_series_partial)

a = sys_a()

# A complete sum and its residue histogram.
cs = complete_sum(a, [1], 2)
print(f"S_(1,2) = {cs.value.real:.0f}, residue histogram {list(cs.histogram)}")

# Two ways to the same local factor: partial series over q | p^l, and the
# normalised count of solutions mod p^l.  They agree as exact rationals.
for p, l in [(2, 1), (2, 2), (3, 1), (5, 1)]:
    series = local_factor(a, p, l).partial
    counted = local_density(a, p, l)
    print(f"p={p} l={l}: series {series}, count {count_mod_q(a, p ** l)} -> {counted}, "
          f"equal {series == counted}")

# The truncated series and the truncated Euler product approach each other.
for Q in (10, 30, 50):
    S = singular_series_partial(a, Q)
    E = euler_product(a, Q)
    print(f"Q={Q:>3}: series {float(S):.6f}, Euler product {float(E):.6f}")

# Nonsingular p-adic zeros certify the local factors are positive.
for system, name in ((a, "x . y"), (sys_b(), "x1^2 y1 + x2^2 y2")):
    print(f"\n{name}")
    for p in primes_up_to(7):
        w = find_nonsingular_padic_zero(system, p)
        print(f"  p={p}: x={w.x}, y={w.y}, status {w.status}")
