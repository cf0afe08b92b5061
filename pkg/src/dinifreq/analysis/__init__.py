from .growth import GrowthReport, growth_step
from .ledger import ConstantsLedger, RadiusChain, bracket, constants_ledger, fit_c2, radius_chain
from .monotonicity import MonotonicityReport, fit_monotonicity
from .order import OrderEstimate, dyadic_iteration, fit_small_sup_family, order_vs_M_scan, small_sup_bound
from .three_sphere import ThreeSphereReport, c_star, sup_norm, three_sphere_H, three_sphere_sup

__all__ = [
    "GrowthReport", "growth_step", "ConstantsLedger", "RadiusChain", "bracket", "constants_ledger", "fit_c2",
    "radius_chain", "MonotonicityReport", "fit_monotonicity", "OrderEstimate", "dyadic_iteration",
    "fit_small_sup_family", "order_vs_M_scan", "small_sup_bound", "ThreeSphereReport", "c_star", "sup_norm",
    "three_sphere_H", "three_sphere_sup",
]
