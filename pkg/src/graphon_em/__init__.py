"""Spline-based graphon estimation with MCMC node reordering and an EM loop."""
__version__ = "0.1.0"

from .bspline import KnotGrid, SplineGraphon
from .em import EMConfig, EMResult, e_step, run_em
from .empirical import DensityOnGrid, EmpiricalGraphon, order_by_degree
from .fit import FitControls, FitResult, fit_theta, select_lambda
from .graphon import AnalyticGraphon, Graphon, get_graphon
from .mcmc import GibbsChain, GibbsConfig, posterior_density, posterior_means, run_chain
from .netsim import Network, degree, sample_latent, sample_network

__all__ = [
    "AnalyticGraphon", "DensityOnGrid", "EMConfig", "EMResult", "EmpiricalGraphon", "FitControls",
    "FitResult", "GibbsChain", "GibbsConfig", "Graphon", "KnotGrid", "Network", "SplineGraphon",
    "degree", "e_step", "fit_theta", "get_graphon", "order_by_degree", "posterior_density",
    "posterior_means", "run_chain", "run_em", "sample_latent", "sample_network", "select_lambda",
]
