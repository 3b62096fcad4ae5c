"""Closed-form study of the reduced three-parameter energy.

After rescaling, the energy of a truncated profile with radius rho,
rotation angle theta and cutoff L collapses to a function of three
numbers: the reduced radius ``rho_tilde = |log sigma| * rho``, the angle
theta, and the reduced cutoff ``L_tilde = L / (2 sqrt(pi))``.  On the
admissible cone ``V_sigma`` this function is

    |log sigma| (sigma L_tilde)^-2
        + 4 pi log(K L_tilde^2) rho_tilde^2 / |log sigma|
        - g(lam, theta) rho_tilde,

which minimizes in closed form: the angle through ``optimal_angles``,
the radius by completing a square, and the cutoff through the
secondary real branch of the Lambert W function.  ``reduced_scan`` is
the brute-force validator for that closed form: direct evaluation on a
dense grid with local refinement, sharing no code with the Lambert
route.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .specfun import EULER_GAMMA, Branch, lambert_w

# angle threshold between the tilted-angle regime and the aligned one
LAMBDA_C = 3.0 * math.pi**2 / (32.0 + 3.0 * math.pi**2)

_PI3_8 = math.pi**3 / 8.0


def g(lam: float, theta):
    """Angular gain g(lam, theta); accepts scalar or array theta."""
    c = np.cos(theta)
    return 8.0 * math.pi * lam * c + _PI3_8 * (1.0 - lam) * (1.0 - 3.0 * c * c)


def g_bar(lam: float) -> float:
    """Maximum of g(lam, .) over the angle, in closed piecewise form."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam = {lam} outside [0, 1]")
    if lam >= LAMBDA_C:
        return (8.0 + math.pi**2 / 4.0) * math.pi * lam - math.pi**3 / 4.0
    return 128.0 * lam**2 / (3.0 * math.pi * (1.0 - lam)) + _PI3_8 * (1.0 - lam)


def delta_gap(lam: float, theta):
    """Gap g_bar(lam) - g(lam, theta) written as completed squares.

    Both branches are manifestly nonnegative, which is how one reads off
    that g_bar is the maximum and where it is attained.  Kept as an
    independent route for testing against the direct difference.
    """
    lam = float(lam)
    c = np.cos(theta)
    if lam < LAMBDA_C:
        center = 32.0 * lam / (3.0 * math.pi**2 * (1.0 - lam))
        return 3.0 * math.pi**3 / 8.0 * (1.0 - lam) * (c - center) ** 2
    slope = 3.0 * math.pi**3 / 4.0 * (lam / LAMBDA_C - 1.0)
    return slope * (1.0 - c) + 3.0 * math.pi**3 / 8.0 * (1.0 - lam) * (1.0 - c) ** 2


def optimal_angles(lam: float) -> tuple[float, float]:
    """The one or two angles maximizing g(lam, .), as (plus, minus)."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam = {lam} outside [0, 1]")
    if lam >= LAMBDA_C:
        return 0.0, 0.0
    arg = 32.0 * lam / (3.0 * math.pi**2 * (1.0 - lam))
    plus = math.acos(min(arg, 1.0))
    return plus, -plus


def k_star() -> float:
    """Truncation constant 16 pi / e^(2 (1 + gamma)) of the log term."""
    return 16.0 * math.pi / math.exp(2.0 * (1.0 + EULER_GAMMA))


def domain_floor(sigma: float) -> float:
    """Smallest admissible reduced cutoff, 1 / (4 sigma sqrt(pi))."""
    return 1.0 / (4.0 * sigma * math.sqrt(math.pi))


@dataclass(frozen=True)
class ReducedPoint:
    """A point (rho_tilde, theta, L_tilde) of the reduced landscape.

    rho_tilde is the radius premultiplied by |log sigma|; L_tilde is the
    cutoff divided by 2 sqrt(pi).  Membership of L_tilde in the
    sigma-dependent domain is checked at evaluation time, not here.
    """

    rho_tilde: float
    theta: float
    L_tilde: float

    def __post_init__(self):
        if not (math.isfinite(self.rho_tilde) and self.rho_tilde > 0.0):
            raise ValueError(f"rho_tilde = {self.rho_tilde} must be positive")
        if not math.isfinite(self.L_tilde):
            raise ValueError("L_tilde must be finite")
        theta = float(self.theta)
        if not math.isfinite(theta):
            raise ValueError("theta must be finite")
        wrapped = math.remainder(theta, 2.0 * math.pi)
        if wrapped >= math.pi:  # remainder returns (-pi, pi]; fold the top end
            wrapped -= 2.0 * math.pi
        object.__setattr__(self, "theta", wrapped)


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma = {sigma} outside (0, 1)")
    return sigma


def _check_k(K: float) -> float:
    K = float(K)
    if K <= 0.0:
        raise ValueError(f"K = {K} must be positive")
    ks = k_star()
    if not 0.5 * ks <= K <= 2.0 * ks:
        warnings.warn(
            f"K = {K:.6g} outside [{0.5 * ks:.6g}, {2 * ks:.6g}]; the "
            "closed-form minimization is untested there",
            stacklevel=3,
        )
    return K


def reduced_energy(point: ReducedPoint, sigma: float, lam: float, K: float) -> float:
    """Evaluate the reduced energy at a point of V_sigma."""
    sigma = _check_sigma(sigma)
    K = _check_k(K)
    floor = domain_floor(sigma)
    if point.L_tilde < floor:
        raise ValueError(
            f"L_tilde = {point.L_tilde:.6g} below the domain floor "
            f"{floor:.6g} for sigma = {sigma:.3g}"
        )
    kl2 = K * point.L_tilde**2
    if kl2 <= 1.0:
        raise ValueError(f"K L_tilde^2 = {kl2:.6g} <= 1: log term undefined")
    logs = abs(math.log(sigma))
    return (
        logs / (sigma * point.L_tilde) ** 2
        + 4.0 * math.pi * math.log(kl2) * point.rho_tilde**2 / logs
        - float(g(lam, point.theta)) * point.rho_tilde
    )


@dataclass(frozen=True)
class ExpansionTerms:
    """The three evaluated terms of the small-sigma energy expansion.

    leading: the sigma-independent limit -g_bar^2 / (32 pi).
    loglog: the positive log|log sigma| / |log sigma| correction.
    k_term: the 1 / |log sigma| correction carrying the constant K.
    """

    leading: float
    loglog: float
    k_term: float

    @property
    def total(self) -> float:
        return self.leading + self.loglog + self.k_term


@dataclass(frozen=True)
class ReducedMinimum:
    """Closed-form global minimum of the reduced energy.

    rho0 and L0 are reduced coordinates; the physical radius and cutoff
    of the corresponding profile are rho0 / |log sigma| and
    2 sqrt(pi) L0.  t0 = 1 / (K L0^2) is the variable in which the
    cutoff stationarity condition becomes w e^w = const.
    """

    rho0: float
    theta0_plus: float
    theta0_minus: float
    L0: float
    t0: float
    min_energy: float
    expansion_terms: ExpansionTerms


def _expansion_terms(sigma: float, lam: float, K: float) -> ExpansionTerms:
    gb = g_bar(lam)
    logs = abs(math.log(sigma))
    lead = -gb * gb / (32.0 * math.pi)
    loglog = gb * gb / (32.0 * math.pi) * math.log(logs) / logs
    k_term = (
        -gb * gb / (64.0 * math.pi)
        * math.log(gb * gb / (64.0 * math.pi * math.e * K))
        / logs
    )
    return ExpansionTerms(leading=lead, loglog=loglog, k_term=k_term)


def minimal_energy_expansion(sigma: float, lam: float, K: float) -> float:
    """Three-term small-sigma expansion of the minimal reduced energy."""
    sigma = _check_sigma(sigma)
    if K <= 0.0:
        raise ValueError(f"K = {K} must be positive")
    return _expansion_terms(sigma, lam, K).total


def reduced_minimize(sigma: float, lam: float, K: float) -> ReducedMinimum:
    """Minimize the reduced energy over V_sigma in closed form.

    The angle is one of optimal_angles(lam); the radius at fixed cutoff
    completes a square; the remaining one-dimensional problem in
    t = 1 / (K L_tilde^2) has its stationarity condition solved by the
    secondary branch of the Lambert W function.  That branch only
    carries a value when g_bar(lam) sigma / (8 sqrt(pi K)) < 1/e, which
    bounds the admissible sigma; a ValueError reports violations.  The
    principal-branch solution t = 1 + O(sigma) lies outside the domain
    and is never returned.
    """
    sigma = _check_sigma(sigma)
    K = _check_k(K)
    if sigma > 0.05:
        warnings.warn(
            f"sigma = {sigma:.3g} > 0.05: leading-order formulas carry "
            "O(sigma^(1/4) log-factor) errors here",
            stacklevel=2,
        )
    gb = g_bar(lam)
    s_arg = -gb * sigma / (8.0 * math.sqrt(math.pi * K))
    if s_arg <= -math.exp(-1.0):
        raise ValueError(
            f"sigma = {sigma:.6g} too large: g_bar(lam) sigma / (8 sqrt(pi K)) "
            f"= {-s_arg:.6g} >= 1/e, no secondary Lambert branch value"
        )
    w = lambert_w(Branch.MINUS_ONE, s_arg)
    t0 = math.exp(2.0 * w)
    L0 = 1.0 / math.sqrt(K * t0)
    logs = abs(math.log(sigma))
    rho0 = gb * logs / (8.0 * math.pi * math.log(K * L0 * L0))
    theta_p, theta_m = optimal_angles(lam)
    min_energy = gb * gb * logs / (64.0 * math.pi) * (1.0 / w**2 + 2.0 / w)
    return ReducedMinimum(
        rho0=rho0,
        theta0_plus=theta_p,
        theta0_minus=theta_m,
        L0=L0,
        t0=t0,
        min_energy=min_energy,
        expansion_terms=_expansion_terms(sigma, lam, K),
    )


@dataclass(frozen=True)
class ScanResult:
    """Argmin of a brute-force grid scan of the reduced energy."""

    rho_tilde: float
    theta: float
    L_tilde: float
    energy: float


def _scan_bounds(sigma: float, lam: float) -> tuple[float, float, float, float]:
    gb = g_bar(lam)
    logs = abs(math.log(sigma))
    rho_hi = gb / (4.0 * math.pi)  # four times the asymptotic radius
    L_lo = domain_floor(sigma)
    L_hi = 10.0 * (8.0 * math.sqrt(math.pi) / gb) * logs / sigma
    return rho_hi, L_lo, L_hi, logs


def reduced_scan(
    sigma: float,
    lam: float,
    K: float,
    *,
    n_rho: int = 400,
    n_theta: int = 64,
    n_L: int = 400,
    refinements: int = 2,
    scale: float = 1.0,
) -> ScanResult:
    """Brute-force minimization of the reduced energy on a dense grid.

    Independent validator for reduced_minimize: plain evaluation over a
    product grid (uniform in radius and angle, log-uniform in cutoff)
    followed by local window refinement around the argmin.  The three
    energy terms separate as a(rho, L) + b(rho, theta), so each pass
    minimizes exactly over (theta, L) per radius sample without
    materializing the full cube.

    scale multiplies the objective before the argmin is taken; any
    positive value leaves the returned point unchanged and scales the
    returned energy, which makes scale-invariance testable.
    """
    sigma = _check_sigma(sigma)
    K = float(K)
    if K <= 0.0:
        raise ValueError(f"K = {K} must be positive")
    scale = float(scale)
    if scale <= 0.0:
        raise ValueError(f"scale = {scale} must be positive")
    if min(n_rho, n_theta, n_L) < 8:
        raise ValueError("need at least 8 samples per axis")
    if refinements < 0:
        raise ValueError("refinements must be >= 0")

    rho_hi, L_floor, L_hi, logs = _scan_bounds(sigma, lam)
    rho_lo = rho_hi / n_rho
    L_lo = L_floor
    theta_lo, theta_hi = -math.pi, math.pi
    first = True

    for level in range(refinements + 1):
        rho = np.linspace(rho_lo, rho_hi, n_rho)
        if first:
            theta = np.linspace(theta_lo, theta_hi, n_theta, endpoint=False)
        else:
            theta = np.linspace(theta_lo, theta_hi, n_theta)
        L = np.geomspace(L_lo, L_hi, n_L)

        cutoff_cost = logs / (sigma * L) ** 2
        quad_coef = 4.0 * math.pi * np.log(K * L * L) / logs
        a = scale * (rho[:, None] ** 2 * quad_coef[None, :] + cutoff_cost[None, :])
        b = scale * (-rho[:, None] * g(lam, theta)[None, :])

        k_best = np.argmin(a, axis=1)
        j_best = np.argmin(b, axis=1)
        rows = np.arange(n_rho)
        totals = a[rows, k_best] + b[rows, j_best]
        i = int(np.argmin(totals))
        j, k = int(j_best[i]), int(k_best[i])
        best = ScanResult(
            rho_tilde=float(rho[i]),
            theta=float(theta[j]),
            L_tilde=float(L[k]),
            energy=float(totals[i]),
        )

        if level == refinements:
            break
        d_rho = rho[1] - rho[0]
        d_theta = theta[1] - theta[0]
        ratio = (L[-1] / L[0]) ** (1.0 / (n_L - 1))
        rho_lo = max(rho[i] - 2.0 * d_rho, 0.25 * d_rho)
        rho_hi = rho[i] + 2.0 * d_rho
        theta_lo = theta[j] - 2.0 * d_theta
        theta_hi = theta[j] + 2.0 * d_theta
        L_lo = max(L[k] / ratio**2, L_floor)
        L_hi = L[k] * ratio**2
        first = False

    return best


@dataclass(frozen=True)
class StabilityEnvelope:
    """Extent of the near-minimal sublevel set on an exhaustive grid."""

    threshold: float
    count: int
    rho_min: float
    rho_max: float
    theta_absmax: float
    L_min: float
    L_max: float


def stability_envelope(
    sigma: float,
    lam: float,
    K: float,
    *,
    margin: float | None = None,
    n_rho: int = 400,
    n_theta: int = 64,
    n_L: int = 400,
) -> StabilityEnvelope:
    """Sweep the scan grid and bound where near-minimal points live.

    Collects every grid point with energy at most min_energy + margin
    (default margin: g_bar^2 / (64 pi |log sigma|)) and reports the
    ranges of its coordinates.  Works slice by slice in the cutoff so
    the full cube is never allocated.
    """
    sigma = _check_sigma(sigma)
    gb = g_bar(lam)
    logs = abs(math.log(sigma))
    if margin is None:
        margin = gb * gb / (64.0 * math.pi * logs)
    threshold = reduced_minimize(sigma, lam, K).min_energy + margin

    rho_hi, L_lo, L_hi, _ = _scan_bounds(sigma, lam)
    rho = np.linspace(rho_hi / n_rho, rho_hi, n_rho)
    theta = np.linspace(-math.pi, math.pi, n_theta, endpoint=False)
    L = np.geomspace(L_lo, L_hi, n_L)
    gain = -rho[:, None] * g(lam, theta)[None, :]

    cutoff_cost = logs / (sigma * L) ** 2
    quad_coef = 4.0 * math.pi * np.log(K * L * L) / logs

    count = 0
    rho_range = [math.inf, -math.inf]
    L_range = [math.inf, -math.inf]
    theta_absmax = 0.0
    for k in range(n_L):
        energies = cutoff_cost[k] + quad_coef[k] * rho[:, None] ** 2 + gain
        mask = energies <= threshold
        hits = int(np.count_nonzero(mask))
        if hits == 0:
            continue
        count += hits
        rows = mask.any(axis=1)
        cols = mask.any(axis=0)
        rho_range[0] = min(rho_range[0], float(rho[rows].min()))
        rho_range[1] = max(rho_range[1], float(rho[rows].max()))
        theta_absmax = max(theta_absmax, float(np.abs(theta[cols]).max()))
        L_range[0] = min(L_range[0], float(L[k]))
        L_range[1] = max(L_range[1], float(L[k]))
    if count == 0:
        raise RuntimeError("no grid point reached the stability threshold")
    return StabilityEnvelope(
        threshold=threshold,
        count=count,
        rho_min=rho_range[0],
        rho_max=rho_range[1],
        theta_absmax=theta_absmax,
        L_min=L_range[0],
        L_max=L_range[1],
    )
