"""Variance and variance-function estimation for random-design regression.

Subpackages by concern:

- :mod:`nprvar.kernels` -- admissible kernels and rate-optimal bandwidths
- :mod:`nprvar.datagen` -- data generation and hard-instance constructions
- :mod:`nprvar.var_estimators` -- scalar variance estimators
- :mod:`nprvar.varfn_estimators` -- local variance-function estimators
- :mod:`nprvar.lb_tools` -- constructive lower-bound machinery
- :mod:`nprvar.harness` -- Monte Carlo rate-verification engine
- :mod:`nprvar.cli` -- the `nprvar` command-line front end
"""

from . import datagen, harness, kernels, lb_tools, var_estimators, varfn_estimators

__all__ = [
    "datagen",
    "harness",
    "kernels",
    "lb_tools",
    "var_estimators",
    "varfn_estimators",
]

__version__ = "0.1.0"
