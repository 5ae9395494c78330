"""Langevin sampling with an exactly integrated Gaussian prior stage.

The package provides target potentials U = f + (m/2)||w||^2, the two-stage
sampler with its prior-diffusion step solved in closed form, a ULA
baseline, the Gaussian one-step transition kernel with its interpolating
SDE, convergence metrics, and a CSV experiment harness.
"""

from ._backend import BACKEND

__all__ = ["BACKEND", "kernel", "metrics", "rng", "sampler", "targets"]
__version__ = "0.1.0"
