"""Regional controllability of Riemann-Liouville time-fractional diffusion systems."""

__version__ = "0.1.0"
