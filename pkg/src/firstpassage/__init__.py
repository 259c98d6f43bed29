"""First-passage reliability of stochastic dynamic systems.

Estimates extreme-value distributions and first-passage probabilities by
adaptive refined Latinized stratified sampling of fractional moments and
an eight-parameter EIGD/LESND mixture fitted by moment matching, with
Monte Carlo and subset-simulation baselines and built-in dynamic
testbeds.
"""

__version__ = "0.1.0"
