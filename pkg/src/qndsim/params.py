"""Physical parameters of the pulsed QND interface and model tiers."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, replace
from typing import NamedTuple

from .errors import ParameterDomainError

__all__ = ["InterfaceParams", "ModelTier", "Rates", "reference_params", "db_to_gain", "gain_to_db"]


class ModelTier(str, enum.Enum):
    """Level of approximation used to assemble the channel."""

    ADIABATIC_NO_BATH = "ADIABATIC_NO_BATH"
    ADIABATIC_BATH = "ADIABATIC_BATH"
    FULL_NO_BATH = "FULL_NO_BATH"
    FULL = "FULL"

    @property
    def adiabatic(self) -> bool:
        return self in (ModelTier.ADIABATIC_NO_BATH, ModelTier.ADIABATIC_BATH)

    @property
    def bath(self) -> bool:
        return self in (ModelTier.ADIABATIC_BATH, ModelTier.FULL)

    @classmethod
    def parse(cls, value) -> "ModelTier":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            names = ", ".join(t.value for t in cls)
            raise ParameterDomainError(f"unknown model tier {value!r}; expected one of {names}", "tier") from None


class Rates(NamedTuple):
    kappa: float
    g: float
    gamma: float


@dataclass(frozen=True)
class InterfaceParams:
    """All physical knobs of the upload protocol.

    Rates are given in s^-1. With ``angular_convention`` set, ``kappa``, ``g``
    and ``gamma`` are read as ordinary frequencies and multiplied by 2*pi
    before use; :attr:`rates` always returns the values the dynamics see.
    """

    kappa: float
    g: float
    gamma: float
    tau: float
    S: float = 1.0
    n_th: float = 0.0
    n_0: float = 0.0
    n_cav0: float = 0.0
    angular_convention: bool = False

    def __post_init__(self):
        for name in ("kappa", "g", "gamma", "tau", "S", "n_th", "n_0", "n_cav0"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterDomainError(f"{name} must be a finite number, got {value!r}", name)
        if self.kappa <= 0:
            raise ParameterDomainError(f"kappa must be > 0, got {self.kappa}", "kappa")
        if self.tau <= 0:
            raise ParameterDomainError(f"tau must be > 0, got {self.tau}", "tau")
        if self.g < 0:
            raise ParameterDomainError(f"g must be >= 0, got {self.g}", "g")
        if self.gamma < 0:
            raise ParameterDomainError(f"gamma must be >= 0, got {self.gamma}", "gamma")
        if self.S <= 0:
            raise ParameterDomainError(f"S must be > 0, got {self.S}", "S")
        for name in ("n_th", "n_0", "n_cav0"):
            if getattr(self, name) < 0:
                raise ParameterDomainError(f"{name} must be >= 0, got {getattr(self, name)}", name)
        if self.gamma >= self.kappa:
            raise ParameterDomainError(
                f"gamma ({self.gamma}) must be smaller than kappa ({self.kappa})", "gamma"
            )
        if self.g >= self.kappa:
            warnings.warn(
                f"g = {self.g:g} is not small compared with kappa = {self.kappa:g}; "
                "the linearized weak-coupling picture is strained",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def rates(self) -> Rates:
        f = 2.0 * math.pi if self.angular_convention else 1.0
        return Rates(self.kappa * f, self.g * f, self.gamma * f)

    def replace(self, **changes) -> "InterfaceParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "InterfaceParams":
        return cls(**data)


def reference_params(**overrides) -> InterfaceParams:
    """Optomechanical-crystal parameter set used as the starting point O of the sweeps."""
    base = dict(kappa=221.5e6, g=1.0e6, gamma=328.0, tau=4e-5, S=1.0, n_th=2.0, n_0=0.01)
    base.update(overrides)
    return InterfaceParams(**base)


def db_to_gain(db: float) -> float:
    """Amplitude gain of a squeezer specified in dB of quadrature variance."""
    return 10.0 ** (db / 20.0)


def gain_to_db(S: float) -> float:
    return 20.0 * math.log10(S)
