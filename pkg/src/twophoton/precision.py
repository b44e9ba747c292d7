"""Frequency-estimation uncertainty.

The full pipeline runs coefficients -> moments -> detector statistics and
applies error propagation, delta_omega^2 = Var(M) / (d<M>/d omega)^2, with the
slope from Richardson-extrapolated central differences. The long-time
asymptotic expressions for each drive regime are kept alongside under stable
formula ids so the two can be compared point by point.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import oracle
from .coeffs import bath_coeffs, check_long_time, long_time_factor, mode_coeffs
from .errors import IllConditionedDerivative, RegimeError
from .measurement import (
    Detector,
    Homodyne,
    MomentSet,
    PhotonCounting,
    continuum_moments,
    measure,
    moments,
    stationary_moments,
)
from .params import BathSpec, DriveRegime, InputState, Regime, SystemParams, classify_regime

DERIVATIVE_FLOOR = 1e-300
FD_CONSISTENCY = 0.1
# differences within this many ulps of the signal are treated as no slope at all
_ROUNDOFF_ULPS = 64
# extra decades of step reduction tried when the h and h/2 slopes disagree
STEP_REFINEMENTS = 3


@dataclass(frozen=True)
class UncertaintyResult:
    delta_omega_sq: float
    mean: float
    variance: float
    dmean_domega: float
    source: str
    detector: Detector
    regime: DriveRegime
    params: SystemParams
    t: float
    state: InputState
    formula: str | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)


# -- full pipeline ------------------------------------------------------------------

def evolved_moments(p: SystemParams, state: InputState, t: float, *, bath: BathSpec | None = None,
                    coefficients: str = "closed", long_time: bool = False) -> MomentSet:
    """Moments of a(t) along the selected route.

    bath=None: closed-form G, L with the exact infinite-flat-band noise.
    bath given: closed-form (``coefficients="closed"``) or exactly propagated
    (``coefficients="oracle"``) bath coefficients summed over the grid.
    long_time=True: stationary small-drive moments from the spectral sums
    (input-independent; the coherent part has decayed).
    """
    if long_time:
        return stationary_moments(p)
    if coefficients == "oracle":
        if bath is None:
            raise ValueError("the oracle route needs a BathSpec")
        mc, bc = oracle.extract_reduced(oracle.propagate(p, bath, t, full=False))
        return moments(mc, bc, state)
    if coefficients != "closed":
        raise ValueError(f"unknown coefficient route {coefficients!r}")
    if bath is None:
        return continuum_moments(p, t, state)
    return moments(mode_coeffs(p, t), bath_coeffs(p, bath, t), state)


def _signal(p, state, detector, t, route):
    return measure(evolved_moments(p, state, t, **route), detector)


def _slope(f: Callable[[float], float], x: float, h: float):
    fp, fm = f(x + h), f(x - h)
    fp2, fm2 = f(x + h / 2), f(x - h / 2)
    d1 = (fp - fm) / (2 * h)
    d2 = (fp2 - fm2) / h
    floor = _ROUNDOFF_ULPS * np.finfo(float).eps * max(abs(fp), abs(fm), abs(fp2), abs(fm2))
    no_slope = abs(fp - fm) <= floor and abs(fp2 - fm2) <= floor
    return d1, d2, (4 * d2 - d1) / 3, no_slope


def delta_omega_full(p: SystemParams, state: InputState, detector: Detector, t: float, *,
                     bath: BathSpec | None = None, coefficients: str = "closed",
                     long_time: bool = False, fd_step: float = 1e-5) -> UncertaintyResult:
    """delta_omega^2 through the full coefficient -> moment -> statistics pipeline.

    A vanishing slope yields +inf (the signal carries no information on omega),
    flagged in ``diagnostics``. If the central differences at h and h/2 disagree
    by more than 10 % the step is cut tenfold, up to STEP_REFINEMENTS times,
    before an IllConditionedDerivative is raised.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not 1e-7 <= fd_step <= 1e-2:
        raise ValueError("fd_step must lie in [1e-7, 1e-2]")
    route = dict(bath=bath, coefficients=coefficients, long_time=long_time)
    h = fd_step * max(abs(p.omega), p.lam, p.gamma)
    regime = classify_regime(p)
    stats = _signal(p, state, detector, t, route)
    f = lambda w: _signal(p.with_omega(w), state, detector, t, route).mean  # noqa: E731
    diag = {"photon_number": evolved_moments(p, state, t, **route).photon_number
            if isinstance(detector, Homodyne) else stats.mean}
    common = dict(mean=stats.mean, variance=stats.variance, source="full", detector=detector,
                  regime=regime, params=p, t=t, state=state)
    # near the exceptional point the signal can vary on omega scales below the default step;
    # shrink the step a few decades before calling the point ill-conditioned
    for _ in range(STEP_REFINEMENTS + 1):
        d1, d2, slope, no_slope = _slope(f, p.omega, h)
        diag.update(h=h, slope_h=d1, slope_h2=d2)
        if no_slope or abs(slope) < DERIVATIVE_FLOOR:
            diag["no_information"] = True
            return UncertaintyResult(math.inf, dmean_domega=0.0 if no_slope else slope, diagnostics=diag,
                                     **common)
        if abs(d1 - d2) <= FD_CONSISTENCY * abs(slope):
            return UncertaintyResult(stats.variance / slope**2, dmean_domega=slope, diagnostics=diag, **common)
        h /= 10
    raise IllConditionedDerivative(
        f"slopes at h={10 * h:.3g} and h/2 disagree: {d1!r} vs {d2!r}")


# -- asymptotic formulas -----------------------------------------------------------

def _n(state: InputState) -> float:
    return state.photon_number


def _div(num, den):
    return math.inf if den == 0 else num / den


def _small_photon(p, state, t, theta):
    gap = p.gamma**2 + p.omega**2 - p.lam**2
    return _div(gap**2 * (3 * (p.gamma**2 + p.omega**2) - p.lam**2), 4 * p.lam**2 * p.omega**2)


def _large_photon(p, state, t, theta):
    lam, om = p.lam, p.omega
    s = math.sqrt(lam**2 - om**2)
    return _div(lam * (lam - om) * (lam + om), 4 * _n(state) * t**2 * om**2 * (lam + s))


def _large_photon_finite_time(p, state, t, theta):
    lam, om = p.lam, p.omega
    s = math.sqrt(lam**2 - om**2)
    bracket = (-2 * lam**3 * t + 2 * lam * (t * om**2 + s) + lam**2 * (1 - 2 * t * s)
               + om**2 * (-1 + 2 * t * s))
    return _div(lam * (lam**2 - om**2) ** 3 * (lam + s), _n(state) * om**2 * bracket**2)


def _large_homodyne_x(p, state, t, theta):
    return _div(p.lam**2, 16 * _n(state) * t**2 * p.omega**2)


def _large_homodyne_p(p, state, t, theta):
    return _div(p.lam**2, 8 * _n(state) * t**2)


def _zero(p, state, t, theta):
    return 0.0


def _large_homodyne_general(p, state, t, theta):
    lam, om, ga = p.lam, p.omega, p.gamma
    s = math.sqrt(lam**2 - om**2)
    num = lam * (lam - om) ** 2 * (lam + om) ** 2 * (
        (lam**2 - om**2 - 2 * ga * s) * math.cos(2 * theta)
        + (-2 * ga + s) * (lam + om * math.sin(2 * theta)))
    den = 2 * _n(state) * (s - ga) * (
        om * (lam - 2 * lam**2 * t + 2 * t * om**2 - 2 * lam * t * s) * math.cos(theta)
        + (lam**2 - 2 * t * om**2 * s) * math.sin(theta)) ** 2
    return _div(num, den)


def _critical_homodyne_x(p, state, t, theta):
    ga, om = p.gamma, p.omega
    return _div(ga**2 * (7 * ga**2 + 3 * om**2),
                4 * _n(state) * t**2 * om**2 * (ga + math.sqrt(ga**2 + om**2)) ** 2)


def _critical_homodyne_p(p, state, t, theta):
    ga, om = p.gamma, p.omega
    return _div(7 * ga**4 + 3 * ga**2 * om**2, 4 * _n(state) * t**2 * om**4)


def _critical_homodyne_p_zero_omega(p, state, t, theta):
    return _div(7 * p.gamma**2, 4 * _n(state))


def _critical_homodyne_general(p, state, t, theta):
    ga, om = p.gamma, p.omega
    r = math.sqrt(ga**2 + om**2)
    num = ga**4 * (7 * ga**2 + 3 * om**2 + 2 * om * r * math.sin(2 * theta))
    den = 4 * _n(state) * (om * (ga**2 * t + (-1 + ga * t) * r) * math.cos(theta)
                           - (ga**2 + (1 - ga * t) * om**2) * math.sin(theta)) ** 2
    return _div(num, den)


@dataclass(frozen=True)
class Formula:
    regime: Regime
    detector: str  # "photon" or "homodyne"
    fn: Callable
    theta: float | None = None  # fixed local-oscillator angle, None = any
    description: str = ""


FORMULAS: dict[str, Formula] = {
    "small-photon": Formula(Regime.SMALL, "photon", _small_photon, None,
                            "stationary photon counting, input independent"),
    "large-photon": Formula(Regime.LARGE, "photon", _large_photon, None,
                            "amplified photon counting, leading order in t"),
    "large-photon-finite-time": Formula(Regime.LARGE, "photon", _large_photon_finite_time, None,
                                        "amplified photon counting with 1/t corrections"),
    "large-homodyne-x": Formula(Regime.LARGE, "homodyne", _large_homodyne_x, 0.0,
                                "theta = 0, lam >> omega > 0"),
    "large-homodyne-p": Formula(Regime.LARGE, "homodyne", _large_homodyne_p, math.pi / 2,
                                "theta = pi/2, lam >> omega > 0"),
    "large-homodyne-p-zero-omega": Formula(Regime.LARGE, "homodyne", _zero, math.pi / 2,
                                           "theta = pi/2 at omega ~ 0"),
    "large-homodyne-general": Formula(Regime.LARGE, "homodyne", _large_homodyne_general, None,
                                      "any theta, finite t"),
    "critical-homodyne-x": Formula(Regime.CRITICAL, "homodyne", _critical_homodyne_x, 0.0,
                                   "theta = 0, gamma t >> 1"),
    "critical-homodyne-p": Formula(Regime.CRITICAL, "homodyne", _critical_homodyne_p, math.pi / 2,
                                   "theta = pi/2, gamma t >> 1, omega > 0"),
    "critical-homodyne-p-zero-omega": Formula(Regime.CRITICAL, "homodyne", _critical_homodyne_p_zero_omega,
                                              math.pi / 2, "theta = pi/2 at omega = 0"),
    "critical-homodyne-general": Formula(Regime.CRITICAL, "homodyne", _critical_homodyne_general, None,
                                         "any theta, finite t"),
}


def _angle_matches(theta, target, tol=1e-9):
    d = (theta - target) % math.pi
    return min(d, math.pi - d) <= tol


def default_formula(p: SystemParams, detector: Detector, regime: DriveRegime | None = None) -> str | None:
    regime = regime or classify_regime(p)
    kind = regime.kind
    if isinstance(detector, PhotonCounting):
        return {Regime.SMALL: "small-photon", Regime.LARGE: "large-photon"}.get(kind)
    theta = detector.theta
    if kind is Regime.SMALL:
        return None
    prefix = "large" if kind is Regime.LARGE else "critical"
    if _angle_matches(theta, 0.0):
        return f"{prefix}-homodyne-x"
    if _angle_matches(theta, math.pi / 2):
        return f"{prefix}-homodyne-p-zero-omega" if p.omega == 0 else f"{prefix}-homodyne-p"
    return f"{prefix}-homodyne-general"


def delta_omega_asymptotic(p: SystemParams, state: InputState, detector: Detector, t: float,
                           regime: DriveRegime | None = None, formula: str | None = None) -> UncertaintyResult:
    """Closed-form long-time delta_omega^2 for the regime and detector.

    Small drive with homodyne detection returns +inf (zero mean signal).
    Side conditions of the simplified homodyne forms only warn; their raw
    values land in ``diagnostics``.
    """
    actual = classify_regime(p)
    if regime is not None and regime.kind is not actual.kind:
        raise RegimeError(f"requested {regime.kind.value} regime but parameters are {actual.kind.value}")
    regime = actual
    diag = {"long_time_factor": long_time_factor(p, t, regime)}
    common = dict(mean=math.nan, variance=math.nan, dmean_domega=math.nan, source="asymptotic",
                  detector=detector, regime=regime, params=p, t=t, state=state)
    if formula is None:
        if regime.kind is Regime.SMALL and isinstance(detector, Homodyne):
            check_long_time(p, t, regime)
            diag["no_information"] = True
            return UncertaintyResult(math.inf, formula="small-homodyne", diagnostics=diag, **common)
        formula = default_formula(p, detector, regime)
        if formula is None:
            raise RegimeError(f"no asymptotic formula for {detector} in the {regime.kind.value} regime")
    try:
        spec = FORMULAS[formula]
    except KeyError:
        raise ValueError(f"unknown formula {formula!r}") from None
    if spec.regime is not regime.kind:
        raise RegimeError(f"formula {formula} is for the {spec.regime.value} regime, "
                          f"parameters are {regime.kind.value}")
    det_kind = "homodyne" if isinstance(detector, Homodyne) else "photon"
    if det_kind != spec.detector:
        raise RegimeError(f"formula {formula} is for {spec.detector} detection")
    theta = detector.theta if isinstance(detector, Homodyne) else 0.0
    if spec.theta is not None and not _angle_matches(theta, spec.theta):
        raise RegimeError(f"formula {formula} needs theta = {spec.theta:.6g}")
    check_long_time(p, t, regime)
    if formula in ("large-homodyne-x", "large-homodyne-p"):
        ratio = p.omega / p.lam
        # omega^2 t >> lam^2 read with the damping time as the clock
        side = p.omega**2 * t / (p.lam**2 / p.gamma)
        diag.update(omega_over_lam=ratio, omega2t_over_lam2_per_gamma=side)
        if not (0 < ratio <= 0.1):
            warnings.warn(f"{formula}: needs lam >> omega > 0 (omega/lam = {ratio:.3g})", stacklevel=2)
        if side < 10:
            warnings.warn(f"{formula}: omega^2 t >> lam^2/gamma not met ({side:.3g})", stacklevel=2)
    value = spec.fn(p, state, t, theta)
    return UncertaintyResult(float(value), formula=formula, diagnostics=diag, **common)


# -- PT-symmetric effective generator ------------------------------------------------

@dataclass(frozen=True)
class EffectiveHamiltonian:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    exceptional_point: bool


def pt_eigenvalues(p: SystemParams, eps: float = 1e-9) -> EffectiveHamiltonian:
    """[[omega, i lam], [i lam, -omega]] and its eigenvalues +-sqrt(omega^2 - lam^2)."""
    H = np.array([[p.omega, 1j * p.lam], [1j * p.lam, -p.omega]])
    root = np.sqrt(complex(p.omega**2 - p.lam**2))
    ep = classify_regime(p, eps).exceptional_point
    return EffectiveHamiltonian(H, np.array([root, -root]), ep)


# -- drive scan ------------------------------------------------------------------------

def _scan_point(args):
    lam, omega, gamma, state, detector, t, kw = args
    return delta_omega_full(SystemParams(omega, lam, gamma), state, detector, t, **kw)


def optimal_drive_scan(omega: float, gamma: float, state: InputState, detector: Detector, t: float,
                       lambdas, workers: int | None = 1, **kw):
    """Full-pipeline delta_omega^2 over a drive grid.

    Returns (argmin lambda, results); ties go to the smaller drive.
    """
    lambdas = [float(x) for x in lambdas]
    jobs = [(lam, omega, gamma, state, detector, t, kw) for lam in lambdas]
    if workers == 1 or len(jobs) < 2:
        results = [_scan_point(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_scan_point, jobs))
    best = None
    for lam, r in sorted(zip(lambdas, results), key=lambda x: x[0]):
        if best is None or r.delta_omega_sq < best[1]:
            best = (lam, r.delta_omega_sq)
    return best[0], results
