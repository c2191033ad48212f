"""Tools for studying fractional parts of p^alpha along primes.

Submodules:
  arith       sieves, multiplicative functions, factoring
  smoothing   C-infinity cutoffs and dyadic partitions of unity
  decomp      combinatorial prime-sum decompositions and range classification
  expsums     exponential sums over primes, discrepancy, derivative-test bounds
  charkloost  Dirichlet characters, Gauss and Kloosterman sums
  oscillatory oscillatory integrals: quadrature, truncation, stationary phase
  cli         command-line entry points
"""

__version__ = "0.1.0"

from . import arith, charkloost, decomp, expsums, oscillatory, smoothing  # noqa: F401
