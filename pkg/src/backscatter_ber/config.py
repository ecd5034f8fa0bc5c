"""Scenario parameters shared by the analytical and Monte Carlo paths."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import validate_rho
from .errors import ConfigValidationError
from .phy import AmbientSource, Encoding, SourceKind


class AoaKind(enum.Enum):
    UNIFORM_SPREAD = "uniform"
    NARROW_SPREAD = "narrow"


@dataclass(frozen=True)
class AoaModel:
    """Joint distribution of the two arrival angles.

    Uniform spread: theta1 and theta2 independent, uniform on (-pi, pi].
    Narrow spread: theta1 uniform on (-pi, pi], theta2 uniform on
    theta1 +- spread/2 (default total spread 10 degrees).
    """

    kind: AoaKind = AoaKind.UNIFORM_SPREAD
    spread_deg: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.spread_deg <= 360.0:
            raise ValueError("spread_deg must lie in (0, 360]")

    @property
    def spread_rad(self) -> float:
        return float(np.deg2rad(self.spread_deg))

    def sample(self, n, rng):
        """Draw n AoA pairs; returns (theta1, theta2) arrays."""
        th1 = rng.uniform(-np.pi, np.pi, n)
        if self.kind is AoaKind.UNIFORM_SPREAD:
            th2 = rng.uniform(-np.pi, np.pi, n)
        else:
            th2 = th1 + rng.uniform(-self.spread_rad / 2, self.spread_rad / 2, n)
        return th1, th2


class Detector(enum.Enum):
    """Detector chain = line code + receiver front end."""

    MANCHESTER_SA = "manchester_sa"
    OOK_SA = "ook_sa"
    MANCHESTER_MA = "manchester_ma"
    OOK_MA = "ook_ma"

    @property
    def encoding(self) -> Encoding:
        return Encoding.MANCHESTER if "manchester" in self.value else Encoding.DIRECT_OOK

    @property
    def multi_antenna(self) -> bool:
        return self.value.endswith("_ma")


def alpha_from_attenuation_db(attenuation_db: float) -> float:
    """Reflection coefficient magnitude from backscatter-path attenuation:
    |alpha|^2 = 10^(-attenuation_db / 10)."""
    if attenuation_db < 0:
        raise ConfigValidationError("attenuation_db must be >= 0")
    return float(np.sqrt(10.0 ** (-attenuation_db / 10.0)))


@dataclass(frozen=True)
class SystemConfig:
    """One complete scenario: tag, channel, source, noise and array."""

    alpha: complex = alpha_from_attenuation_db(1.1)
    sigma_h_sq: float = 1.0
    n_samples: int = 2000
    snr_db: float = 20.0
    m_r: int = 4
    d_over_lambda: float = 0.5
    rho_r: float = 0.0
    rho_b: float = 0.0
    rho_t: float = 0.0
    source: AmbientSource = field(default_factory=AmbientSource)
    aoa: AoaModel = field(default_factory=AoaModel)

    def __post_init__(self):
        try:
            if abs(self.alpha) > 1.0 + 1e-12:
                raise ConfigValidationError("|alpha| must be <= 1")
            if self.sigma_h_sq <= 0:
                raise ConfigValidationError("sigma_h_sq must be > 0")
            if self.n_samples < 2 or self.n_samples % 2:
                raise ConfigValidationError("n_samples must be even and >= 2")
            if self.m_r < 2:
                raise ConfigValidationError("m_r must be >= 2")
            if self.d_over_lambda <= 0:
                raise ConfigValidationError("d_over_lambda must be > 0")
            for name in ("rho_r", "rho_b", "rho_t"):
                validate_rho(getattr(self, name), name)
        except ConfigValidationError:
            raise
        except Exception as exc:
            raise ConfigValidationError(str(exc)) from exc

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def sigma_n_sq(self) -> float:
        """Noise variance from SNR = E[|X|^2] / sigma_n^2."""
        return self.source.mean_abs_sq / self.snr_linear

    @property
    def abs_alpha_sq(self) -> float:
        return abs(self.alpha) ** 2

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    def with_rho(self, rho: float) -> "SystemConfig":
        """Set all three link correlation factors at once."""
        return self.replace(rho_r=rho, rho_b=rho, rho_t=rho)
