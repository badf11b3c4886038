"""Numerical laboratory for level-set characterizations of Sobolev-type seminorms.

Modules
-------
field      analytic test functions, exact derivatives, grid sampling
calculus   finite differences, directional symbols, fractional seminorms
spaces     ball Banach function space norms on sampled data
weights    Muckenhoupt A_p weights and constant estimates
dyadic     shifted dyadic grids, minimizing polynomials, sparse families
bsvy       the level-set functionals, sup and limit scans, experiments
harness    scenario files, verification suites, reports
"""
from . import bsvy, calculus, dyadic, field, harness, spaces, weights
from .bsvy import *  # noqa: F401,F403
from .calculus import *  # noqa: F401,F403
from .dyadic import *  # noqa: F401,F403
from .field import *  # noqa: F401,F403
from .spaces import *  # noqa: F401,F403
from .weights import *  # noqa: F401,F403

__version__ = "0.1.0"
