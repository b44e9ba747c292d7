"""Gaussian moments of the evolved mode and the statistics of the two detectors.

The bath starts in vacuum and the input is a coherent state, so the evolved
mode is Gaussian: it is fixed by its mean <a> and the central moments
n_noise = <da^dag da> and m_central = <da da> (da = a - <a>). Central
moments are kept separate from the displacement so that large coherent
amplitudes do not cancel against noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.linalg import expm

from .coeffs import BathCoefficients, ModeCoefficients
from .params import InputState, SystemParams
from .spectral import spectral_sums_closed


@dataclass(frozen=True)
class PhotonCounting:
    def __str__(self):
        return "photon"


@dataclass(frozen=True)
class Homodyne:
    """Quadrature (e^{-i theta} a^dag + e^{i theta} a) / 2."""

    theta: float

    def __str__(self):
        return f"homodyne({self.theta:.17g})"


Detector = Union[PhotonCounting, Homodyne]


@dataclass(frozen=True)
class MomentSet:
    t: float
    mean: complex
    n_noise: float
    m_central: complex

    @property
    def photon_number(self) -> float:
        return abs(self.mean) ** 2 + self.n_noise

    @property
    def aa(self) -> complex:
        """Raw <a a>."""
        return self.mean**2 + self.m_central


@dataclass(frozen=True)
class MeasurementStats:
    mean: float
    variance: float
    detector: Detector


def moments(coeffs: ModeCoefficients, bath_c: BathCoefficients | None, state: InputState) -> MomentSet:
    """Moments from the linear expansion with a vacuum bath.

    <a> = G alpha + L* alpha*, n_noise = |L|^2 + sum |nu_k|^2,
    m_central = G L* + sum mu_k nu_k*.
    """
    if bath_c is not None and not math.isclose(bath_c.t, coeffs.t, rel_tol=0, abs_tol=1e-12 * max(1.0, abs(coeffs.t))):
        raise ValueError(f"coefficient times differ: {coeffs.t} vs {bath_c.t}")
    G, L = complex(coeffs.G), complex(coeffs.L)
    alpha = state.alpha
    mean = G * alpha + np.conj(L) * alpha
    n = abs(L) ** 2
    m = G * np.conj(L)
    if bath_c is not None:
        n += bath_c.sum_nu2
        m += bath_c.sum_mu_nuc
    return MomentSet(float(coeffs.t), complex(mean), float(n), complex(m))


def continuum_noise(p: SystemParams, t: float) -> tuple[float, complex]:
    """Central (n_noise, m_central) for an infinite flat Markovian bath.

    Solves the covariance equation dS/dt = A S + S A^T + D for the ordered
    second moments S = [[<aa>, <aa^dag>], [<a^dag a>, <a^dag a^dag>]] from
    vacuum, with D = 2 gamma |0><1| the vacuum input noise, through one
    augmented matrix exponential.
    """
    if t == 0:
        return 0.0, 0j
    A = np.array([[-1j * p.omega - p.gamma, p.lam], [p.lam, 1j * p.omega - p.gamma]])
    eye = np.eye(2)
    K = np.kron(A, eye) + np.kron(eye, A)  # row-major vec of A S + S A^T
    aug = np.zeros((5, 5), dtype=complex)
    aug[:4, :4] = K
    aug[:4, 4] = [0.0, 2 * p.gamma, 0.0, 0.0]
    E = expm(aug * t)
    s0 = np.array([0.0, 1.0, 0.0, 0.0], dtype=complex)
    S = (E[:4, :4] @ s0 + E[:4, 4]).reshape(2, 2)
    return float(S[1, 0].real), complex(S[0, 0])


def continuum_moments(p: SystemParams, t: float, state: InputState, coeffs: ModeCoefficients | None = None) -> MomentSet:
    from .coeffs import mode_coeffs

    mc = coeffs if coeffs is not None else mode_coeffs(p, t)
    n, m = continuum_noise(p, t)
    mean = complex(mc.G) * state.alpha + np.conj(complex(mc.L)) * state.alpha
    return MomentSet(float(t), complex(mean), n, m)


def stationary_moments(p: SystemParams) -> MomentSet:
    """t -> infinity moments for small drive, from the closed-form spectral sums."""
    ss = spectral_sums_closed(p)
    return MomentSet(math.inf, 0j, ss.sum_nu2, complex(np.conj(ss.cross)))


def photon_stats(m: MomentSet, method: str = "wick") -> MeasurementStats:
    """Mean and variance of a^dag a.

    "wick" uses the exact Gaussian fourth moment with displacement; "decoupling"
    builds <a^dag a a^dag a> from the pairwise decoupling relation.
    """
    n_total = m.photon_number
    if method == "wick":
        b = m.mean
        n, mc = m.n_noise, m.m_central
        var = n * n + n + abs(mc) ** 2 + abs(b) ** 2 * (2 * n + 1) + 2 * (np.conj(b) ** 2 * mc).real
    elif method == "decoupling":
        var = decoupling_fourth_moment(m, ("ad", "a", "ad", "a")).real - n_total**2
    else:
        raise ValueError(f"unknown method {method!r}")
    return MeasurementStats(float(n_total), float(var), PhotonCounting())


def homodyne_stats(m: MomentSet, theta: float) -> MeasurementStats:
    ph = np.exp(1j * theta)
    mean = (m.mean * ph).real
    var = 0.25 * (1 + 2 * m.n_noise + 2 * (ph * ph * m.m_central).real)
    return MeasurementStats(float(mean), float(var), Homodyne(theta))


def measure(m: MomentSet, detector: Detector) -> MeasurementStats:
    if isinstance(detector, Homodyne):
        return homodyne_stats(m, detector.theta)
    return photon_stats(m)


def _normalize_ops(ops: Sequence[str]) -> list[bool]:
    out = []
    for op in ops:
        if op in ("a", "-"):
            out.append(False)
        elif op in ("ad", "a+", "+", "a_dag", "adag"):
            out.append(True)
        else:
            raise ValueError(f"unknown operator {op!r}")
    return out


def _first(m: MomentSet, dag: bool) -> complex:
    return np.conj(m.mean) if dag else m.mean


def _central_pair(m: MomentSet, x: bool, y: bool) -> complex:
    if not x and not y:
        return m.m_central
    if x and y:
        return np.conj(m.m_central)
    if x and not y:
        return m.n_noise
    return m.n_noise + 1.0


def _raw_pair(m: MomentSet, x: bool, y: bool) -> complex:
    return _central_pair(m, x, y) + _first(m, x) * _first(m, y)


def decoupling_fourth_moment(m: MomentSet, ops: Sequence[str]) -> complex:
    """<ABCD> ~ <AB><CD> + <AC><BD> + <AD><BC> - 2<A><B><C><D> for A..D in {a, a^dag}."""
    A, B, C, D = _normalize_ops(ops)
    pr = lambda x, y: _raw_pair(m, x, y)  # noqa: E731
    return complex(
        pr(A, B) * pr(C, D) + pr(A, C) * pr(B, D) + pr(A, D) * pr(B, C)
        - 2 * _first(m, A) * _first(m, B) * _first(m, C) * _first(m, D)
    )


def wick_fourth_moment(m: MomentSet, ops: Sequence[str]) -> complex:
    """Exact Gaussian <ABCD>: means, mean-pair-cumulant terms and central pairings."""
    X = _normalize_ops(ops)
    mu = [_first(m, x) for x in X]
    k = lambda i, j: _central_pair(m, X[i], X[j])  # noqa: E731
    total = mu[0] * mu[1] * mu[2] * mu[3]
    for i in range(4):
        for j in range(i + 1, 4):
            rest = [r for r in range(4) if r not in (i, j)]
            total += k(i, j) * mu[rest[0]] * mu[rest[1]]
    total += k(0, 1) * k(2, 3) + k(0, 2) * k(1, 3) + k(0, 3) * k(1, 2)
    return complex(total)
