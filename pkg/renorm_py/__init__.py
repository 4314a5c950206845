"""Time-dependent energy-level renormalisation of a spin coupled to a bosonic mode."""

__version__ = "0.1.0"
