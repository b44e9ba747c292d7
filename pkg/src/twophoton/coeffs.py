"""Markovian Bogoliubov coefficients of the driven mode and of the bath modes.

The Heisenberg-picture field is expanded as

    a(t) = G a + L* a^dag + sum_k (mu_k b_k + nu_k* b_k^dag)

with damping ``gamma`` from a flat (Markovian) bath. ``G`` and ``L`` solve

    dG/dt = lam L - (gamma + i omega) G,   dL/dt = lam G + (i omega - gamma) L,

and ``mu_k``, ``nu_k`` solve the same system driven by ``-i g_k exp(-i omega_k t)``.
All closed forms use the principal branch of ``s = sqrt(lam^2 - omega^2)`` and are
valid in every drive regime.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, LongTimeError, RegimeError, ResonanceError
from .params import BathSpec, DriveRegime, Regime, SystemParams, classify_regime

#: below this |s t| the ratio sinh(st)/s is taken from its Taylor series
SERIES_THRESHOLD = 1e-4
# above this Re(s) t the growing exponential alone is evaluated (no cosh overflow)
_SPLIT_EXPONENT = 20.0
#: long-time factor below which asymptotic forms are refused / warned about
LONG_TIME_ERROR = 3.0
LONG_TIME_WARN = 10.0


@dataclass(frozen=True)
class ModeCoefficients:
    """Coefficients of a(0) (``G``) and, conjugated, of a^dag(0) (``L``) at time ``t``."""

    G: complex | np.ndarray
    L: complex | np.ndarray
    t: float | np.ndarray


@dataclass(frozen=True)
class BathCoefficients:
    """Per-mode coefficients: ``mu`` multiplies b_k(0), ``conj(nu)`` multiplies b_k^dag(0)."""

    mu: np.ndarray
    nu: np.ndarray
    t: float
    bath: BathSpec | None = None

    @property
    def sum_mu2(self) -> float:
        return float(np.sum(np.abs(self.mu) ** 2))

    @property
    def sum_nu2(self) -> float:
        return float(np.sum(np.abs(self.nu) ** 2))

    @property
    def sum_mu_nuc(self) -> complex:
        return complex(np.sum(self.mu * np.conj(self.nu)))


def _propagator_parts(s: complex, gamma: float, t: np.ndarray):
    """Return (e^{-gamma t} cosh(st), e^{-gamma t} sinh(st)/s) without overflow."""
    x = s * t
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        decay = np.exp(-gamma * t)
        ch = decay * np.cosh(x)
        sh = decay * np.sinh(x) / s
        # growing branch only once e^{-(s+gamma) t} is negligible next to e^{(s-gamma) t}
        ep = np.exp((s - gamma) * t)
        em = np.exp(-(s + gamma) * t)
        ch_split = 0.5 * (ep + em)
        sh_split = 0.5 * (ep - em) / s
        x2 = x * x
        ch_series = decay * (1 + x2 / 2 + x2 * x2 / 24)
        sh_series = decay * t * (1 + x2 / 6 + x2 * x2 / 120)
    split = s.real * t > _SPLIT_EXPONENT
    small = np.abs(x) < SERIES_THRESHOLD
    ch = np.where(split, ch_split, ch)
    sh = np.where(split, sh_split, sh)
    ch = np.where(small, ch_series, ch)
    sh = np.where(small, sh_series, sh)
    return ch, sh


def mode_coeffs(p: SystemParams, t) -> ModeCoefficients:
    """Closed-form ``G(t)`` and ``L(t)``; ``t`` may be a scalar or an array."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    ch, sh = _propagator_parts(p.s, p.gamma, t_arr)
    G = ch - 1j * p.omega * sh
    L = p.lam * sh
    if t_arr.ndim == 0:
        return ModeCoefficients(complex(G), complex(L), float(t_arr))
    return ModeCoefficients(G, L, t_arr)


def _resolvent_denominator(p: SystemParams, wk: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = 1j * wk - p.gamma
    D = z * z + p.omega**2 - p.lam**2
    return z, D


def _check_resonance(p, wk, D):
    scale = np.maximum.reduce([np.abs(wk) ** 2 + p.gamma**2, np.full_like(wk, p.omega**2), np.full_like(wk, p.lam**2)])
    scale = np.maximum(scale, np.finfo(float).tiny)
    bad = np.abs(D) <= 1e-12 * scale
    if np.any(bad):
        raise ResonanceError(
            f"bath frequency {wk[bad][0]!r} sits on a pole of the coefficient resolvent"
        )


def _bath_from_mode(p, wk, gk, G, L, phase):
    z, D = _resolvent_denominator(p, wk)
    _check_resonance(p, wk, D)
    mu = -1j * gk / D * ((1j * p.omega + z) * (G - phase) - p.lam * L)
    nu = -1j * gk / D * (-p.lam * (G - phase) + (z - 1j * p.omega) * L)
    return mu, nu


def bath_coeffs(p: SystemParams, bath: BathSpec, t: float) -> BathCoefficients:
    """Closed-form ``mu_k(t)``, ``nu_k(t)`` for every mode of ``bath``.

    Raises ResonanceError when ``lam^2 - omega^2 - (gamma - i omega_k)^2`` vanishes.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    mc = mode_coeffs(p, t)
    wk = bath.frequencies
    phase = np.exp(-1j * wk * t)
    mu, nu = _bath_from_mode(p, wk, bath.couplings, mc.G, mc.L, phase)
    return BathCoefficients(mu, nu, float(t), bath)


def symplectic_defect(mode: ModeCoefficients, bath_c: BathCoefficients | None = None,
                      sums: tuple[float, float] | None = None) -> float:
    """|G|^2 - |L|^2 + sum(|mu|^2 - |nu|^2) - 1.

    Bath contributions come from ``bath_c`` or from precomputed ``sums`` =
    (sum |mu|^2, sum |nu|^2).
    """
    value = abs(mode.G) ** 2 - abs(mode.L) ** 2 - 1.0
    if bath_c is not None:
        value += bath_c.sum_mu2 - bath_c.sum_nu2
    if sums is not None:
        value += sums[0] - sums[1]
    return float(value)


def long_time_factor(p: SystemParams, t: float, regime: DriveRegime | None = None) -> float:
    """How many relaxation (or growth) times ``t`` spans for the regime's long-time form."""
    regime = regime or classify_regime(p)
    s_re = p.s.real
    if regime.kind is Regime.SMALL:
        return t * (p.gamma - s_re)
    if regime.kind is Regime.LARGE:
        return t * (s_re - p.gamma)
    return t * p.gamma


def check_long_time(p: SystemParams, t: float, regime: DriveRegime | None = None) -> float:
    factor = long_time_factor(p, t, regime)
    if factor < LONG_TIME_ERROR:
        raise LongTimeError(f"long-time factor {factor:.3g} < {LONG_TIME_ERROR}")
    if factor < LONG_TIME_WARN:
        warnings.warn(f"long-time factor {factor:.3g} < {LONG_TIME_WARN}; asymptotic form is rough",
                      stacklevel=3)
    return factor


@dataclass(frozen=True)
class OperatorExpansion:
    """Coefficient map of a(t) over {a, a^dag, b_k, b_k^dag} (initial operators)."""

    a: complex
    a_dag: complex
    b: np.ndarray
    b_dag: np.ndarray
    t: float
    regime: DriveRegime


def asymptotic_mode_operator(p: SystemParams, bath: BathSpec, t: float,
                             regime: DriveRegime | None = None) -> OperatorExpansion:
    """Long-time form of a(t) for the drive regime of ``p``.

    Small drive: system coefficients have decayed, only stationary bath terms remain.
    Large drive: everything carries the growth factor e^{(s-gamma)t}; terms that do
    not grow are dropped. Critical drive: the system part freezes and the bath
    terms keep their oscillating e^{-i omega_k t} pieces.
    """
    actual = classify_regime(p)
    if regime is not None and regime.kind is not actual.kind:
        raise RegimeError(f"requested {regime.kind.value} regime but parameters are {actual.kind.value}")
    regime = actual
    check_long_time(p, t, regime)

    wk, gk = bath.frequencies, bath.couplings
    s = p.s
    phase = np.exp(-1j * wk * t)
    if regime.kind is Regime.SMALL:
        G = L = 0.0
    elif regime.kind is Regime.LARGE:
        grow = math.exp((s.real - p.gamma) * t)
        G = grow * 0.5 * (1 - 1j * p.omega / s)
        L = grow * p.lam / (2 * s)
        phase = np.zeros_like(phase)
    else:
        G = 0.5 * (1 - 1j * p.omega / s)
        L = p.lam / (2 * s)
    mu, nu = _bath_from_mode(p, wk, gk, G, L, phase)
    return OperatorExpansion(complex(G), complex(np.conj(L)), mu, np.conj(nu), float(t), regime)


# -- continuum (infinite flat band) bath sums by quadrature -------------------------

def _split_parts(p: SystemParams, G: complex, L: complex):
    """mu/g = P1 + Q1 e^{-i w t}, nu/g = P2 + Q2 e^{-i w t} as functions of w."""
    om, lam = p.omega, p.lam

    def parts(w):
        z, D = _resolvent_denominator(p, w)
        P1 = -1j * ((1j * om + z) * G - lam * L) / D
        Q1 = 1j * (1j * om + z) / D
        P2 = -1j * (-lam * G + (z - 1j * om) * L) / D
        Q2 = -1j * lam / D
        return P1, Q1, P2, Q2

    return parts


def _quad_real_line(f, scale, rtol, epsabs, points=(), inner=0.0):
    """Integral of a smooth real f over |w| > inner via w = scale * tan(u)."""
    def g(u):
        c = math.cos(u)
        return f(scale * math.tan(u)) * scale / (c * c)

    edge = math.atan(inner / scale)
    brk = sorted({math.atan(x / scale) for x in points if abs(x) > inner})
    cuts = [-math.pi / 2, *[b for b in brk if b < -edge], -edge]
    cuts += [edge, *[b for b in brk if b > edge], math.pi / 2]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0 or (a == -edge and b == edge):
            continue
        total += integrate.quad(g, a, b, epsabs=epsabs, epsrel=rtol, limit=400)[0]
    return total


def _quad_fourier(f, t, rtol, epsabs, inner, cut):
    """Integral over |w| > inner of complex f(w) e^{-i w t}, f decaying at least like 1/w^2."""
    # fold onto [inner, inf): f(w) e^{-iwt} + f(-w) e^{iwt}
    even = lambda w: f(w) + f(-w)  # noqa: E731
    odd = lambda w: f(w) - f(-w)  # noqa: E731
    total = 0.0 + 0.0j
    for part, weight, sign in ((even, "cos", 1.0), (odd, "sin", -1.0j)):
        for comp, unit in ((lambda w: part(w).real, 1.0), (lambda w: part(w).imag, 1.0j)):
            head, _ = integrate.quad(comp, inner, cut, weight=weight, wvar=t,
                                     epsabs=epsabs, epsrel=rtol, limit=2000)
            tail, _ = integrate.quad(comp, cut, np.inf, weight=weight, wvar=t,
                                     epsabs=epsabs, limlst=200, limit=2000)
            total += sign * unit * (head + tail)
    return total


def _quad_window(f, half, rtol, epsabs):
    """Integral of complex f over [-half, half], split at 0."""
    total = 0.0 + 0.0j
    for a, b in ((-half, 0.0), (0.0, half)):
        re = integrate.quad(lambda w: f(w).real, a, b, epsabs=epsabs, epsrel=rtol, limit=1000)[0]
        im = integrate.quad(lambda w: f(w).imag, a, b, epsabs=epsabs, epsrel=rtol, limit=1000)[0]
        total += re + 1j * im
    return total


def continuum_bath_sums(p: SystemParams, t: float, rtol: float = 1e-11):
    """Sums of |mu|^2, |nu|^2 and mu nu* over an infinite flat band (density gamma/pi).

    Evaluates the closed-form bath coefficients on the real frequency line by
    adaptive quadrature. Near w = 0 (where the split pieces can have a pole
    at threshold) the exact coefficients are integrated directly; outside,
    the e^{-i omega_k t} pieces are split off into Fourier integrals. This is
    the dense-bath limit of summing ``bath_coeffs``.
    """
    if t == 0:
        return 0.0, 0.0, 0j
    mc = mode_coeffs(p, t)
    G, L = complex(mc.G), complex(mc.L)
    parts = _split_parts(p, G, L)
    J0 = p.gamma / math.pi
    scale = max(p.gamma, abs(p.omega), p.lam, 1e-300)
    inner, cut = scale, 50.0 * scale
    epsabs = rtol * 1e-3 * max(1.0, abs(G) ** 2, abs(L) ** 2) / scale
    kappa = (1j * p.s).real  # peak location for lam < omega
    pts = (kappa, -kappa)

    def exact(w):
        mu, nu = _bath_from_mode(p, np.atleast_1d(w), 1.0, G, L, np.exp(-1j * w * t))
        return complex(mu[0]), complex(nu[0])

    def smooth(kind):
        def f(w):
            P1, Q1, P2, Q2 = parts(np.asarray(w))
            if kind == "mu":
                return float(abs(P1) ** 2 + abs(Q1) ** 2)
            if kind == "nu":
                return float(abs(P2) ** 2 + abs(Q2) ** 2)
            return complex(P1 * np.conj(P2) + Q1 * np.conj(Q2))
        return f

    def osc(kind):
        # coefficient of e^{-i w t}
        def f(w):
            P1, Q1, P2, Q2 = parts(np.asarray(w))
            if kind == "mu":
                return complex(2 * np.conj(P1) * Q1)
            if kind == "nu":
                return complex(2 * np.conj(P2) * Q2)
            return complex(Q1 * np.conj(P2))
        return f

    def cross_conj_osc(w):
        # coefficient of e^{+i w t} in mu nu*, read as f(-w) e^{-i(-w)t}
        P1, Q1, P2, Q2 = parts(np.asarray(-w))
        return complex(P1 * np.conj(Q2))

    def window(kind):
        def f(w):
            mu, nu = exact(w)
            if kind == "mu":
                return abs(mu) ** 2 + 0j
            if kind == "nu":
                return abs(nu) ** 2 + 0j
            return mu * np.conj(nu)
        return f

    def outer_real(f):
        return _quad_real_line(f, scale, rtol, epsabs, pts, inner)

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            mu2 = _quad_window(window("mu"), inner, rtol, epsabs).real + outer_real(smooth("mu"))
            mu2 += _quad_fourier(osc("mu"), t, rtol, epsabs, inner, cut).real
            nu2 = _quad_window(window("nu"), inner, rtol, epsabs).real + outer_real(smooth("nu"))
            nu2 += _quad_fourier(osc("nu"), t, rtol, epsabs, inner, cut).real
            f = smooth("cross")
            cross = _quad_window(window("cross"), inner, rtol, epsabs)
            cross += outer_real(lambda w: f(w).real) + 1j * outer_real(lambda w: f(w).imag)
            cross += _quad_fourier(osc("cross"), t, rtol, epsabs, inner, cut)
            cross += _quad_fourier(cross_conj_osc, t, rtol, epsabs, inner, cut)
    except integrate.IntegrationWarning as exc:
        raise ConvergenceError(f"continuum bath quadrature failed: {exc}") from exc
    return J0 * mu2, J0 * nu2, J0 * cross
