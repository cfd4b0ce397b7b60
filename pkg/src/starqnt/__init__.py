"""End-to-end tomography of bit-flip quantum star networks."""
from .core import BitString, ParamVector, UsageError, alpha, alpha_grad, parity
from .dists import Basis, Circuit, OutcomeDistribution, meas_dist, meas_dist_grad, state_dist
from .fisher import cfim, protocol_qfim, qcrb_trace
from .protocols import Protocol, execute_protocol, plan_protocol

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "BitString",
    "Circuit",
    "OutcomeDistribution",
    "ParamVector",
    "Protocol",
    "UsageError",
    "alpha",
    "alpha_grad",
    "cfim",
    "execute_protocol",
    "meas_dist",
    "meas_dist_grad",
    "parity",
    "plan_protocol",
    "protocol_qfim",
    "qcrb_trace",
    "state_dist",
]
