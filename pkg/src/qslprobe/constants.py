"""Physical constants (CODATA 2018)."""

import math

#: Reduced Planck constant in J*s.
HBAR = 1.054571817e-34

HALF_PI = 0.5 * math.pi
NS = 1e-9
