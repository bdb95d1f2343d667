"""Rough-volatility Monte Carlo and zero-vanna implied volatility."""

from ._zerovanna import *  # noqa: F401,F403
from ._zerovanna import __version__  # noqa: F401
