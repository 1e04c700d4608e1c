"""Rumour spreading with random stifling on the complete graph."""

from rumorlab.analytic import InitialCondition, analyze, clt_variance, limit_fraction, stop_time
from rumorlab.stifling import Constant, Explicit, Geometric, Poisson, ZetaTail, parse_distribution

__all__ = [
    "Constant",
    "Explicit",
    "Geometric",
    "InitialCondition",
    "Poisson",
    "ZetaTail",
    "analyze",
    "clt_variance",
    "limit_fraction",
    "parse_distribution",
    "stop_time",
]
