"""ASEP shock laboratory: coupled exclusion dynamics, blocking measures and KPZ-type limit laws."""
from .lattice import SiteConfiguration, classify_omega, parse, reversed_step
from .dynamics import ClockStream, CoupledEnsemble, evolve, evolve_lazy
from .blocking import BlockingQuery, mu_Z, mu_Z_cylinder, sample_mu_Z
from .distributions import F_GUE, F_Mp, F_M1_mc, p_xi
from .mixture import build_mixture, limit_X_cdf, mixture_cylinder, p_LR
from .scenario import ScenarioParams, run_scenario_replica

__all__ = [
    "SiteConfiguration", "classify_omega", "parse", "reversed_step",
    "ClockStream", "CoupledEnsemble", "evolve", "evolve_lazy",
    "BlockingQuery", "mu_Z", "mu_Z_cylinder", "sample_mu_Z",
    "F_GUE", "F_Mp", "F_M1_mc", "p_xi",
    "build_mixture", "limit_X_cdf", "mixture_cylinder", "p_LR",
    "ScenarioParams", "run_scenario_replica",
]
__version__ = "0.1.0"
