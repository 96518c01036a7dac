"""Independent brute-force verifiers: Fock-basis channel and Monte Carlo trajectories."""

from .fock import fock_channel_oracle, oracle_negativity_boundary, wigner_from_density

__all__ = ["fock_channel_oracle", "oracle_negativity_boundary", "wigner_from_density"]
