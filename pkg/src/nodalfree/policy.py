"""Numeric tolerances shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-10   # unitarity, reconstruction residuals
    hermitian: float = 1e-12    # H - H^dagger, G + G^dagger
    transport: float = 1e-8     # parallel-transport residual
    integration: float = 1e-6   # quadrature-level agreement
    nodal: float = 1e-12        # |z| below which Phi[z] is undefined
    gate: float = 1e-8          # gate equality after phase alignment


DEFAULT = Tolerances()
