"""Toric-code quantum memory: local decoders, chain-counting bounds and failure-rate fits."""

from .lattice import BETA, TorusLattice, RingLattice

__all__ = ["BETA", "TorusLattice", "RingLattice"]
