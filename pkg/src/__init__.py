"""qlft-synth - Estimator-based fault-tolerant control synthesis for linear quantum stochastic systems."""

__version__ = "1.0.0"
__description__ = "Realizability checks, rank-constrained LMI synthesis, certification and moment simulation"
