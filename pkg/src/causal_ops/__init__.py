"""causal-ops: relativistic-causality classification of quantum operations.

Simulates probe-based measurements of finite-dimensional quantum systems
carried by worldlines in 1+1 Minkowski spacetime, tests no-signalling, and
constructs semilocalisable decompositions of channels.
"""

__version__ = "0.1.0"
