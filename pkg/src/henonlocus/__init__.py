"""Certified numerics for the critical locus of complex quadratic Henon maps
in the beta = 18.75 horseshoe region: region certification, escape-rate
gradient fields, tangency tracing, symbolic dynamics, and parameter-loop
monodromy."""

__version__ = "0.1.0"

from .dynamics import Params, Point  # noqa: F401
from .region import RegionConstants, region_constants  # noqa: F401
