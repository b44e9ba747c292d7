"""Long-time bath sums of the small-drive regime.

With a flat density J0 = gamma/pi extended over the whole real line, the
stationary bath coefficients give three sums:

    sum_mu2 = 1 + lam^2 / (2 Delta)
    sum_nu2 = lam^2 / (2 Delta)
    cross   = lam (gamma + i omega) / (2 Delta),      Delta = gamma^2 + omega^2 - lam^2.

``sum_nu2`` is the stationary photon number and ``cross`` is <a^dag a^dag>
(the conjugate of the stationary <a a>).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, RegimeError
from .params import SystemParams


@dataclass(frozen=True)
class SpectralSums:
    sum_mu2: float
    sum_nu2: float
    cross: complex
    params: SystemParams


def _gap(p: SystemParams) -> float:
    delta = p.gamma**2 + p.omega**2 - p.lam**2
    if not delta > 0:
        raise RegimeError("stationary bath sums exist only for lam^2 < gamma^2 + omega^2")
    return delta


def spectral_sums_closed(p: SystemParams) -> SpectralSums:
    delta = _gap(p)
    nu2 = p.lam**2 / (2 * delta)
    cross = p.lam * (p.gamma + 1j * p.omega) / (2 * delta)
    return SpectralSums(1.0 + nu2, nu2, cross, p)


def _integrands(p: SystemParams):
    """Stationary |mu|^2, |nu|^2 and conj(mu nu*) per unit density at bath frequency w."""
    om, lam, ga = p.omega, p.lam, p.gamma

    def inv_d2(w):
        return 1.0 / abs(lam**2 - om**2 - (ga - 1j * w) ** 2) ** 2

    def mu2(w):
        return ((om + w) ** 2 + ga**2) * inv_d2(w)

    def nu2(w):
        return lam**2 * inv_d2(w)

    def cross(w):
        return lam * (ga + 1j * (om + w)) * inv_d2(w)

    return mu2, nu2, cross


def spectral_sums_quadrature(p: SystemParams, quad_tol: float = 1e-10) -> SpectralSums:
    """Same sums by adaptive quadrature of the stationary integrands over the real line.

    The substitution w = c tan(u) maps the line onto (-pi/2, pi/2); the
    integrands fall off like 1/w^2 so the mapped integrand stays bounded.
    Breakpoints are placed at the integrand peaks.
    """
    mu2, nu2, cross = _integrands(p)
    J0 = p.gamma / math.pi
    c = max(p.gamma, abs(p.omega), p.lam)
    # peaks of 1/|lam^2 - omega^2 - (gamma - i w)^2| sit at w = 0 and w = +-sqrt(omega^2 - lam^2)
    kappa = math.sqrt(max(p.omega**2 - p.lam**2, 0.0))
    peaks = {0.0, kappa, -kappa, -p.omega}
    # near threshold the peak at w = 0 narrows to a half-width gap / (2 gamma)
    width = _gap(p) / (2 * p.gamma)
    for k in (1.0, 10.0, 100.0):
        if k * width < c:
            peaks |= {k * width, -k * width}
    peaks = sorted(peaks)
    brk = [math.atan(x / c) for x in peaks]
    edges = [-math.pi / 2, *brk, math.pi / 2]

    def mapped(f):
        def g(u):
            cu = math.cos(u)
            return f(c * math.tan(u)) * c / (cu * cu)
        return g

    fns = {
        "mu2": mu2,
        "nu2": nu2,
        "cross_re": lambda w: cross(w).real,
        "cross_im": lambda w: cross(w).imag,
    }
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for key, f in fns.items():
                g = mapped(f)
                total = 0.0
                for a, b in zip(edges[:-1], edges[1:]):
                    if b > a:
                        total += integrate.quad(g, a, b, epsabs=0.0, epsrel=quad_tol * 0.1, limit=500)[0]
                out[key] = J0 * total
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"spectral quadrature did not converge: {exc}") from exc
    return SpectralSums(out["mu2"], out["nu2"], complex(out["cross_re"], out["cross_im"]), p)


def divergence_exponent(omega: float, gamma: float, offsets=None) -> float:
    """Fitted exponent of sum_nu2 ~ (gamma^2 + omega^2 - lam^2)^k as lam approaches threshold."""
    if offsets is None:
        offsets = np.logspace(-6, -3, 7)
    thr = gamma**2 + omega**2
    x, y = [], []
    for d in offsets:
        lam = math.sqrt(thr - d)
        s = spectral_sums_quadrature(SystemParams(omega, lam, gamma))
        x.append(math.log(d))
        y.append(math.log(s.sum_nu2))
    return float(np.polyfit(x, y, 1)[0])
