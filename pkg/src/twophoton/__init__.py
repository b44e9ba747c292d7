"""Frequency estimation of a damped optical mode under two-photon driving."""

from .params import (
    EPS_REGIME, VACUUM, BathSpec, DriveRegime, InputState, Regime, SystemParams, classify_regime,
)
from .coeffs import (
    BathCoefficients, ModeCoefficients, OperatorExpansion, asymptotic_mode_operator, bath_coeffs,
    continuum_bath_sums, mode_coeffs, symplectic_defect,
)
from .oracle import BogoliubovMap, build_generator, extract_reduced, integrate_markov_ode, propagate
from .spectral import SpectralSums, spectral_sums_closed, spectral_sums_quadrature
from .measurement import (
    Homodyne, MeasurementStats, MomentSet, PhotonCounting, continuum_moments, decoupling_fourth_moment,
    homodyne_stats, moments, photon_stats, stationary_moments, wick_fourth_moment,
)
from .precision import (
    FORMULAS, EffectiveHamiltonian, UncertaintyResult, delta_omega_asymptotic, delta_omega_full,
    optimal_drive_scan, pt_eigenvalues,
)

__version__ = "0.1.0"
