"""Heavy-tailed infinitely divisible processes over conservative flows.

Simulation of the Poisson series representation over a null-recurrent Markov
shift, exact ergodic quantities of the underlying flow, and Monte Carlo checks
of the limit theory for sample autocovariances and autocorrelations.
"""

from .errors import ConfigurationError
from .levy import LevyTail, SplitTail, squared_transform
from .markov import LazyWalkChain, ReturnTable, VisitSampler, return_probs
from .samplers import RngStream

__all__ = [
    "ConfigurationError",
    "LazyWalkChain",
    "LevyTail",
    "ReturnTable",
    "RngStream",
    "SplitTail",
    "VisitSampler",
    "return_probs",
    "squared_transform",
]

__version__ = "0.1.0"
