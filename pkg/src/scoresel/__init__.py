"""Scored top-k feature selection with a linear autoencoder.

A per-feature scorer vector ranks all features globally while a dependent
top-k selector branch checks that the highest-scored features reconstruct
the data. The package also ships the full evaluation protocol (OLS
reconstruction, extremely randomized trees) and an experiment lab for
generalization-gap and stability measurements.
"""

__version__ = "0.1.0"
