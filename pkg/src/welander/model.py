"""Adjusted Welander two-box model: parameters, switching function, vector fields.

All quantities are nondimensional; time is the rescaled time ``tau = gamma * t``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "PhysicalParams",
    "ModelParams",
    "State",
    "nondimensionalize",
    "switching_value",
    "switching_derivatives",
    "vector_field_smooth",
    "vector_field_region",
    "jacobian_smooth",
    "surface_density_anomaly",
    "region_equilibrium",
]


class State(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class PhysicalParams:
    gamma: float
    T_a: float
    T_0: float
    S_0: float
    F_0: float
    H_depth: float
    alpha_S: float
    alpha_T: float
    k1: float
    k2: float
    g_star: float
    rho_0: float

    def validate(self) -> None:
        if not self.gamma > 0:
            raise InvalidParameterError("gamma must be positive")
        if not self.H_depth > 0:
            raise InvalidParameterError("H_depth must be positive")
        if not self.rho_0 > 0:
            raise InvalidParameterError("rho_0 must be positive")
        if self.T_a == self.T_0:
            raise InvalidParameterError("T_a and T_0 must differ")
        if self.alpha_T == 0:
            raise InvalidParameterError("alpha_T must be nonzero")
        if not 0 < self.k1 < self.k2:
            raise InvalidParameterError("mixing rates must satisfy 0 < k1 < k2")


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional parameters. ``epsilon == 0`` selects the Filippov limit."""

    mu: float
    eta: float
    kappa1: float = 0.1
    kappa2: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidParameterError(f"{f.name} must be a finite number, got {v!r}")
        if not 0 < self.kappa1 < self.kappa2:
            raise InvalidParameterError("mixing rates must satisfy 0 < kappa1 < kappa2")
        if self.epsilon < 0:
            raise InvalidParameterError("epsilon must be >= 0")

    @property
    def is_pws(self) -> bool:
        return self.epsilon == 0

    @property
    def dkappa(self) -> float:
        return self.kappa2 - self.kappa1

    def kappa(self, i: int) -> float:
        if i == 1:
            return self.kappa1
        if i == 2:
            return self.kappa2
        raise ValueError(f"field index must be 1 or 2, got {i!r}")

    def with_(self, **changes: float) -> ModelParams:
        return replace(self, **changes)

    def to_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> ModelParams:
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise InvalidParameterError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_json(self) -> str:
        # repr of a float round-trips exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> ModelParams:
        return cls.from_dict(json.loads(text))


def nondimensionalize(p: PhysicalParams, epsilon: float = 0.0) -> ModelParams:
    """Map physical parameters to ``(mu, eta, kappa1, kappa2)``; epsilon is passed through."""
    p.validate()
    dT = p.T_a - p.T_0
    kappa1 = p.k1 / p.gamma
    kappa2 = p.k2 / p.gamma
    mu = p.F_0 * p.S_0 * p.alpha_S / (p.gamma * p.alpha_T * dT * p.H_depth)
    eta = p.g_star * (kappa2 - kappa1) / (p.gamma * p.alpha_T * dT * p.rho_0)
    return ModelParams(mu=mu, eta=eta, kappa1=kappa1, kappa2=kappa2, epsilon=epsilon)


def switching_value(u: float, epsilon: float) -> float:
    """Smooth step 0.5*(1 + tanh(u/eps)); Heaviside (0.5 at u = 0) when eps == 0."""
    if epsilon < 0:
        raise InvalidParameterError("epsilon must be >= 0")
    if epsilon == 0:
        if u > 0:
            return 1.0
        if u < 0:
            return 0.0
        return 0.5
    return 0.5 * (1.0 + math.tanh(u / epsilon))


def switching_derivatives(u: float, epsilon: float) -> tuple[float, float, float, float]:
    """Return (H, H', H'', H''') of the tanh switch at ``u``."""
    if not epsilon > 0:
        raise InvalidParameterError("derivatives need epsilon > 0")
    t = math.tanh(u / epsilon)
    sech2 = 1.0 - t * t
    h0 = 0.5 * (1.0 + t)
    h1 = sech2 / (2.0 * epsilon)
    h2 = -t * sech2 / epsilon**2
    h3 = sech2 * (3.0 * t * t - 1.0) / epsilon**3
    return h0, h1, h2, h3


def surface_density_anomaly(s, p: ModelParams) -> float:
    """Signed switching argument ``y - x - eta``; positive on the convective side R2."""
    return s[1] - s[0] - p.eta


def _require_smooth(p: ModelParams) -> None:
    if not p.epsilon > 0:
        raise InvalidParameterError("smooth model requires epsilon > 0; use the Filippov engine for epsilon = 0")


def vector_field_smooth(s, p: ModelParams) -> np.ndarray:
    _require_smooth(p)
    x, y = s
    k = p.kappa1 + switching_value(y - x - p.eta, p.epsilon) * p.dkappa
    return np.array([1.0 - (1.0 + k) * x, p.mu - k * y])


def vector_field_region(i: int, s, p: ModelParams) -> np.ndarray:
    """Linear field f_i, defined on the whole plane."""
    k = p.kappa(i)
    x, y = s
    return np.array([1.0 - (1.0 + k) * x, p.mu - k * y])


def jacobian_smooth(s, p: ModelParams) -> np.ndarray:
    _require_smooth(p)
    x, y = s
    h0, h1, _, _ = switching_derivatives(y - x - p.eta, p.epsilon)
    k = p.kappa1 + h0 * p.dkappa
    a = p.dkappa * h1
    return np.array(
        [
            [-(1.0 + k) + x * a, -x * a],
            [y * a, -k - y * a],
        ]
    )


def region_equilibrium(i: int, p: ModelParams) -> State:
    """Zero of f_i: (1/(1+kappa_i), mu/kappa_i)."""
    k = p.kappa(i)
    return State(1.0 / (1.0 + k), p.mu / k)
