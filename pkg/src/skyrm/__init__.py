"""Reduced-energy toolkit for chiral magnet skyrmions.

Computes the two-dimensional skyrmion energy (exchange, anisotropy, DMI,
nonlocal stray field) on grids, evaluates Belavin-Polyakov and truncated
profiles with their closed-form energies, minimizes the reduced
three-parameter energy via Lambert W, relaxes full fields by projected
gradient descent, fits fields back to the profile family, and checks
the spherical Hessian spectral gap.  The `skyrm` console script exposes
all of it; `skyrm verify` runs the acceptance checks.
"""

from .field import (
    EnergyBreakdown,
    EnergyParams,
    SpinField,
    anisotropy_energy,
    charge_density,
    completed_square_residual,
    completed_square_terms,
    dmi_energy,
    exchange_energy,
    from_physical,
    load_field,
    random_unit_field,
    save_field,
    topological_charge,
)
from .fit import FitResult, dirichlet_distance, optimal_rotation, rotation_tilt
from .minimize import (
    MinimizeConfig,
    MinimizeReport,
    energy_gradient,
    minimize,
    total_energy,
)
from .profiles import (
    BPProfile,
    TailTruncationWarning,
    TruncatedProfile,
    bp_eval,
    bp_exact_constants,
    sample,
    truncated_energy_closed_form,
    truncated_eval,
)
from .reduced import (
    LAMBDA_C,
    ExpansionTerms,
    ReducedMinimum,
    ReducedPoint,
    ScanResult,
    StabilityEnvelope,
    delta_gap,
    domain_floor,
    g,
    g_bar,
    k_star,
    minimal_energy_expansion,
    optimal_angles,
    reduced_energy,
    reduced_minimize,
    reduced_scan,
    stability_envelope,
)
from .specfun import EULER_GAMMA, Branch, bessel_k, euler_gamma, lambert_w, mu_integral
from .sphere import (
    GapReport,
    GapRow,
    HarmonicKind,
    SphereQuadrature,
    VectorHarmonic,
    expand_tangent_field,
    gap_report,
    harmonic_eval,
    hessian_form,
)
from .stray import (
    LATTICE_RENORM,
    SpectralPlan,
    f_surf,
    f_surf_direct,
    f_vol,
    f_vol_direct,
    stray_field_gradient,
)
from .verify import SUITES, CheckResult, run_suite

__version__ = "0.1.0"

__all__ = [
    "BPProfile",
    "Branch",
    "CheckResult",
    "EULER_GAMMA",
    "EnergyBreakdown",
    "EnergyParams",
    "ExpansionTerms",
    "FitResult",
    "GapReport",
    "GapRow",
    "HarmonicKind",
    "LAMBDA_C",
    "LATTICE_RENORM",
    "MinimizeConfig",
    "MinimizeReport",
    "ReducedMinimum",
    "ReducedPoint",
    "SUITES",
    "ScanResult",
    "SpectralPlan",
    "SphereQuadrature",
    "SpinField",
    "StabilityEnvelope",
    "TailTruncationWarning",
    "TruncatedProfile",
    "VectorHarmonic",
    "anisotropy_energy",
    "bessel_k",
    "bp_eval",
    "bp_exact_constants",
    "charge_density",
    "completed_square_residual",
    "completed_square_terms",
    "delta_gap",
    "dirichlet_distance",
    "dmi_energy",
    "domain_floor",
    "energy_gradient",
    "euler_gamma",
    "exchange_energy",
    "expand_tangent_field",
    "f_surf",
    "f_surf_direct",
    "f_vol",
    "f_vol_direct",
    "from_physical",
    "g",
    "g_bar",
    "gap_report",
    "harmonic_eval",
    "hessian_form",
    "k_star",
    "lambert_w",
    "load_field",
    "minimal_energy_expansion",
    "minimize",
    "mu_integral",
    "optimal_angles",
    "optimal_rotation",
    "random_unit_field",
    "reduced_energy",
    "reduced_minimize",
    "reduced_scan",
    "rotation_tilt",
    "run_suite",
    "sample",
    "save_field",
    "stability_envelope",
    "stray_field_gradient",
    "topological_charge",
    "total_energy",
    "truncated_energy_closed_form",
    "truncated_eval",
    "__version__",
]
