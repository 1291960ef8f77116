"""Equilibrium arrival-time strategies under competition and a soft disturbance."""
from .numerics import Tolerances, DEFAULT_TOL, kernel_K, bracketed_root, integrate_density_product
from .disturbance import Disturbance, DisturbanceKind, SupportGap, uniform, piecewise, shift_disturbance
from .strategy import MixedStrategy, SupportSummary, late_arrival_family

__version__ = "0.1.0"
