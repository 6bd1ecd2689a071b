"""
Two routes to the singular integral
===================================

The singular integral of ``x . y = 0`` can be reached by integrating the
oscillatory integral I(beta) over a growing window, or by shrinking a hat
weight around the zero locus.  Both are shown here next to the closed form
of I for this system.
"""

import math

import numpy as np
from scipy.special import sici

from bihom.forms import sys_a
from bihom.integral import oscillatory_I, schmidt_J, singular_integral_profile, truncation_exponent

system = sys_a()
unit = [(-0.5, 0.5)] * 3


def closed_form(u):
    """I(u) for x . y on centred unit cubes, via the sine integral."""
    return 1.0 if u == 0 else (2 * sici(math.pi * u / 2)[0] / (math.pi * u)) ** 3


# The quadrature route reproduces the closed form.
for u in (0.0, 0.5, 2.0, 8.0):
    r = oscillatory_I(system, [u], unit, unit)
    print(f"I({u:>4}) quadrature {r.value.real:.12f}  closed form {closed_form(u):.12f}")

# Truncated integrals J(Phi) from one shared set of I evaluations.
profile = singular_integral_profile(system, [1, 2, 4, 8, 16], unit, unit)
print()
for phi, res in profile.items():
    print(f"J({phi:>4g}) = {res.value:.9f}  (error {res.error:.1e})")
p = truncation_exponent(profile)
print(f"J(2 Phi) - J(Phi) decays like Phi^-{p:.2f}; I itself decays like |beta|^-3 here")

# The hat-weighted route and the gap between the two.
J = schmidt_J(system, 32, unit, unit)
print(f"\nextrapolated J~ = {J.extrapolated:.9f}, J(16) = {profile[16.0].value:.9f}, "
      f"gap {abs(J.extrapolated - profile[16.0].value):.1e}")
tail = 2 * np.sum([closed_form(u) for u in np.arange(16.0, 4000.0, 0.5)]) * 0.5
print(f"rough tail estimate beyond Phi = 16: {tail:.1e}")
