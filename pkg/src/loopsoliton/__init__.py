"""Hyperelliptic sigma functions, divisor flows and loop-soliton numerics."""
from .curve import CurvePoint, Divisor, HyperellipticCurve, lift, make_curve, make_divisor
from .kleinian import SigmaContext, make_context
from .periods import PeriodData, compute_periods

__version__ = "0.1.0"

__all__ = [
    "CurvePoint",
    "Divisor",
    "HyperellipticCurve",
    "PeriodData",
    "SigmaContext",
    "compute_periods",
    "lift",
    "make_context",
    "make_curve",
    "make_divisor",
    "__version__",
]
