"""Numerical laboratory for thermostat flows on the flat and conformal 2-torus.

Submodules: geometry, model, flow, cocycle, analysis, liouville, config, cli.
Hot loops live in ``_kernels`` and are compiled with numba unless
``THERMOLAB_DISABLE_NUMBA=1`` is set, in which case they run as plain Python.
"""
__version__ = "0.1.0"

from ._accel import backend_name  # noqa: E402

__all__ = ["__version__", "backend_name"]
