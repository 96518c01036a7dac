"""Simulator of a squeezer-assisted pulsed optomechanical quantum interface.

The linear Langevin dynamics are solved exactly (:mod:`qndsim.dynamics`),
reduced to a beamsplitter channel with transmittivity ``T`` and added noise
``V_N`` (:mod:`qndsim.channel`), and Fock states are propagated through that
channel to test Wigner negativity (:mod:`qndsim.nongaussian`).
"""

from .channel import ChannelDecomposition, SqueezerModel, compute_channel
from .dynamics import LinearInputOutputMap, PulseMode, TransferKernels
from .errors import ConfigError, ConsistencyError, NumericalError, ParameterDomainError, QndSimError, TruncationError
from .nongaussian import WignerGrid, channel_wigner, fock_wigner, wigner_at_origin
from .params import InterfaceParams, ModelTier, db_to_gain, reference_params

__version__ = "0.1.0"

__all__ = [
    "ChannelDecomposition",
    "SqueezerModel",
    "compute_channel",
    "LinearInputOutputMap",
    "PulseMode",
    "TransferKernels",
    "ConfigError",
    "ConsistencyError",
    "NumericalError",
    "ParameterDomainError",
    "QndSimError",
    "TruncationError",
    "WignerGrid",
    "channel_wigner",
    "fock_wigner",
    "wigner_at_origin",
    "InterfaceParams",
    "ModelTier",
    "db_to_gain",
    "reference_params",
]
