"""Domain types: system parameters, drive regimes, input states, bath grids."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

#: default relative tolerance of the critical band around lambda^2 = gamma^2 + omega^2
EPS_REGIME = 1e-9
#: absolute floor used by the exceptional-point test when both lambda and omega vanish
EPS_ABS = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Mode frequency ``omega``, two-photon drive ``lam`` and damping ``gamma``.

    ``gamma`` is the amplitude damping rate, ``pi * J(omega)`` for a flat
    spectral density. ``gamma == 0`` is only accepted with ``lossless=True``
    (oracle and limit checks). A negative ``omega`` describes the mirrored
    rotation sense; it is accepted so that central differences in ``omega``
    can straddle zero.
    """

    omega: float
    lam: float
    gamma: float
    lossless: bool = False

    def __post_init__(self):
        for name in ("omega", "lam", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.gamma == 0 and not self.lossless:
            raise ValueError("gamma == 0 requires lossless=True")

    @property
    def threshold_sq(self) -> float:
        """gamma^2 + omega^2, the squared critical drive."""
        return self.gamma**2 + self.omega**2

    @property
    def s(self) -> complex:
        """Principal square root of lam^2 - omega^2."""
        return complex(np.sqrt(complex(self.lam**2 - self.omega**2)))

    def with_omega(self, omega: float) -> "SystemParams":
        return SystemParams(omega, self.lam, self.gamma, self.lossless)

    def with_lam(self, lam: float) -> "SystemParams":
        return SystemParams(self.omega, lam, self.gamma, self.lossless)


class Regime(enum.Enum):
    SMALL = "small"
    CRITICAL = "critical"
    LARGE = "large"


@dataclass(frozen=True)
class DriveRegime:
    kind: Regime
    exceptional_point: bool

    def __str__(self):
        return self.kind.value + (" (EP)" if self.exceptional_point else "")


def classify_regime(p: SystemParams, eps_regime: float = EPS_REGIME) -> DriveRegime:
    """Classify ``p`` as small, critical or large drive, and flag the EP at lam == omega."""
    lam_sq = p.lam**2
    thr = p.threshold_sq
    if lam_sq < thr * (1 - eps_regime):
        kind = Regime.SMALL
    elif lam_sq > thr * (1 + eps_regime):
        kind = Regime.LARGE
    else:
        kind = Regime.CRITICAL
    ep = abs(p.lam - abs(p.omega)) <= eps_regime * max(p.lam, abs(p.omega), EPS_ABS)
    return DriveRegime(kind, ep)


@dataclass(frozen=True)
class InputState:
    """Coherent input |alpha> with real amplitude; ``alpha == 0`` is the vacuum."""

    alpha: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")

    @classmethod
    def vacuum(cls) -> "InputState":
        return cls(0.0)

    @classmethod
    def coherent(cls, alpha: float) -> "InputState":
        return cls(float(alpha))

    @classmethod
    def from_photon_number(cls, n: float) -> "InputState":
        if n < 0:
            raise ValueError("photon number must be >= 0")
        return cls(math.sqrt(n))

    @property
    def photon_number(self) -> float:
        return self.alpha**2

    @property
    def is_vacuum(self) -> bool:
        return self.alpha == 0.0


VACUUM = InputState()


@dataclass(frozen=True)
class BathSpec:
    """Flat-band discretized bath.

    ``mode_count`` modes sit at the midpoints of a uniform grid over ``band``;
    each couples with ``g_k = sqrt(density * spacing)``, so the couplings
    squared sum to ``density * (hi - lo)`` exactly.
    """

    mode_count: int
    band: tuple[float, float]
    density: float

    def __post_init__(self):
        lo, hi = self.band
        if self.mode_count < 1:
            raise ValueError("mode_count must be >= 1")
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise ValueError(f"invalid band {self.band!r}")
        if not (self.density >= 0 and math.isfinite(self.density)):
            raise ValueError("density must be finite and >= 0")
        object.__setattr__(self, "band", (float(lo), float(hi)))

    @classmethod
    def around(
        cls,
        p: SystemParams,
        mode_count: int = 4000,
        width: float | None = None,
    ) -> "BathSpec":
        """Band of ``width`` centred on omega with density gamma/pi.

        The default width is 80 * max(gamma, lam, |omega|).
        """
        if width is None:
            width = 80.0 * max(p.gamma, p.lam, abs(p.omega))
        return cls(mode_count, (p.omega - width / 2, p.omega + width / 2), p.gamma / math.pi)

    @property
    def width(self) -> float:
        return self.band[1] - self.band[0]

    @property
    def spacing(self) -> float:
        return self.width / self.mode_count

    @cached_property
    def frequencies(self) -> np.ndarray:
        k = np.arange(self.mode_count)
        return self.band[0] + (k + 0.5) * self.spacing

    @cached_property
    def couplings(self) -> np.ndarray:
        return np.full(self.mode_count, math.sqrt(self.density * self.spacing))

    @property
    def gamma(self) -> float:
        """Markovian damping rate implied by the density."""
        return math.pi * self.density

    def contains(self, omega: float) -> bool:
        return self.band[0] <= omega <= self.band[1]

    def refined(self, factor: int = 2) -> "BathSpec":
        """Same band, ``factor`` times more modes."""
        return BathSpec(self.mode_count * factor, self.band, self.density)

    def widened(self, factor: float = 2.0) -> "BathSpec":
        """Band ``factor`` times wider about its centre, same spacing."""
        c = 0.5 * (self.band[0] + self.band[1])
        half = 0.5 * self.width * factor
        return BathSpec(int(round(self.mode_count * factor)), (c - half, c + half), self.density)
