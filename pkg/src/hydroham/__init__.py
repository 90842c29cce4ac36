"""Generalised Hamiltonian structures of hydrodynamic type and flat F-manifolds."""

from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
