"""Projected gradient descent for the grid energy over unit spin fields.

The descent works on the raw (nx, ny, 3) array: compute the tangentially
projected gradient of the total energy, zero it on the frozen boundary
ring, step against it with an Armijo backtracking line search, and pull
the iterate back to the sphere by renormalization.  Plain first-order
descent is deliberate: every accepted step strictly decreases the
energy, which is the invariant the verification suite leans on.  A
quasi-Newton or heat-flow stepper could slot in behind the same report
type if speed ever matters more than that guarantee.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .field import (
    EnergyBreakdown,
    EnergyParams,
    SpinField,
    _dx,
    _dxt,
    _dy,
    _dyt,
    anisotropy_energy,
    dmi_energy,
    exchange_energy,
    topological_charge,
)
from .reduced import k_star, reduced_minimize
from .stray import SpectralPlan, f_surf, f_vol, stray_field_gradient

_SIXTEEN_PI = 16.0 * math.pi


def total_energy(
    field: SpinField, params: EnergyParams, plan: SpectralPlan | None = None
) -> EnergyBreakdown:
    """All five raw energy integrals of a field, bundled with the couplings.

    The weighted sum (exchange plus sigma^2 times the anisotropy, DMI and
    nonlocal combination) is the ``total`` property of the result.
    """
    return EnergyBreakdown(
        exchange=exchange_energy(field),
        anisotropy=anisotropy_energy(field),
        dmi=dmi_energy(field),
        f_vol=f_vol(field, plan),
        f_surf=f_surf(field, plan),
        sigma=params.sigma,
        lam=params.lam,
    )


def energy_gradient(
    field: SpinField, params: EnergyParams, plan: SpectralPlan | None = None
) -> np.ndarray:
    """Tangentially projected L2 gradient of the total energy.

    Each local term differentiates through the exact adjoints of the
    shared stencils, so pairing the result with any tangent variation v
    under h^2 sum(grad . v) reproduces the directional derivative of
    total_energy to rounding error; the nonlocal part comes from
    stray_field_gradient with the same pairing convention.  Terms whose
    coupling coefficient vanishes (DMI at lam = 0, nonlocal at lam = 1)
    are skipped rather than computed and multiplied by zero.
    """
    m = field.data
    h = field.h
    s2 = params.sigma**2
    lam = params.lam

    gx = _dx(m, h)
    gy = _dy(m, h)
    grad = 2.0 * (_dxt(gx, h) + _dyt(gy, h))

    grad[:, :, 0] += 2.0 * s2 * m[:, :, 0]
    grad[:, :, 1] += 2.0 * s2 * m[:, :, 1]

    if lam > 0.0:
        c = 2.0 * s2 * lam
        grad[:, :, 0] -= c * _dx(m[:, :, 2], h)
        grad[:, :, 1] -= c * _dy(m[:, :, 2], h)
        grad[:, :, 2] -= c * (_dxt(m[:, :, 0], h) + _dyt(m[:, :, 1], h))

    if lam < 1.0:
        grad += s2 * (1.0 - lam) * stray_field_gradient(field, plan)

    grad -= np.sum(grad * m, axis=2)[:, :, None] * m
    return grad


@dataclass(frozen=True)
class MinimizeConfig:
    """Knobs of the descent loop.

    grad_tol is the stopping threshold on the sup-norm (largest per-cell
    vector magnitude) of the projected gradient.  step0 seeds the line
    search; accepted steps carry over and regrow by 1/backtrack, so its
    exact value only costs a few extra backtracks on the first
    iteration.  renorm_every = 1 renormalizes after every step; larger
    values defer the projection, tolerable because the drift per step is
    O(step^2) and a safety net reprojects before it reaches 1e-7.
    """

    max_iter: int = 1000
    grad_tol: float = 1e-3
    step0: float = 0.05
    backtrack: float = 0.5
    armijo: float = 0.25
    renorm_every: int = 1

    def __post_init__(self):
        if self.max_iter <= 0:
            raise ValueError("max_iter must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack must lie in (0, 1)")
        if not 0.0 < self.armijo < 0.5:
            raise ValueError("armijo must lie in (0, 0.5)")
        if self.renorm_every < 1:
            raise ValueError("renorm_every must be >= 1")


@dataclass(frozen=True)
class MinimizeReport:
    """Outcome of a descent run; trace holds the accepted energies."""

    iterations: int
    breakdown: EnergyBreakdown
    trace: list[float]
    charge: int
    converged: bool
    final_grad_norm: float


def _normalize(data: np.ndarray) -> np.ndarray:
    return data / np.sqrt(np.sum(data * data, axis=2))[:, :, None]


def _theory_scales(params: EnergyParams):
    """Reduced-theory radius and cutoff in physical units, or None.

    None when sigma sits outside the Lambert branch domain, where the
    reduced theory offers no prediction to validate against.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = reduced_minimize(params.sigma, params.lam, k_star())
    except ValueError:
        return None
    logs = abs(math.log(params.sigma))
    return m.rho0 / logs, 2.0 * math.sqrt(math.pi) * m.L0


def minimize(
    field: SpinField, params: EnergyParams, config: MinimizeConfig | None = None
) -> tuple[SpinField, MinimizeReport]:
    """Descend the total energy from a charge-1 initial field.

    Preconditions: charge exactly 1 and exchange below 16 pi (otherwise
    ValueError).  When the reduced theory predicts a radius the grid
    cannot carry (fewer than 5 cells per radius), the run is refused
    with the required spacing in the message; when the box is smaller
    than three predicted profile-decay lengths (radius times cutoff), a
    warning flags the truncation bias.  During the loop the boundary
    ring never moves, every accepted step lowers the energy, and the run
    aborts with RuntimeError if the iterate ever reaches exchange 16 pi
    or changes charge.
    """
    if config is None:
        config = MinimizeConfig()
    charge0 = topological_charge(field)
    if charge0 != 1:
        raise ValueError(f"initial charge is {charge0}, need exactly 1")
    if exchange_energy(field) >= _SIXTEEN_PI:
        raise ValueError("initial exchange energy is >= 16 pi")

    h = field.h
    scales = _theory_scales(params)
    if scales is not None:
        rho_phys, cutoff_phys = scales
        if rho_phys < 5.0 * h:
            raise ValueError(
                f"predicted radius {rho_phys:.4g} under-resolved at h = {h:.4g}; "
                f"need h <= {rho_phys / 5.0:.4g}"
            )
        extent = 0.5 * h * (min(field.nx, field.ny) - 1)
        if extent < 3.0 * rho_phys * cutoff_phys:
            warnings.warn(
                f"box halfwidth {extent:.4g} is below three profile decay "
                f"lengths ({3 * rho_phys * cutoff_phys:.4g}); the tail is "
                "visibly truncated",
                stacklevel=2,
            )

    use_stray = params.lam < 1.0
    plan = SpectralPlan(field.nx, field.ny, h) if use_stray else None
    s2 = params.sigma**2
    lam = params.lam

    def evaluate(data: np.ndarray) -> tuple[float, SpinField]:
        f = SpinField(data, h, field.origin, ring_tol=field.ring_tol)
        e = exchange_energy(f) + s2 * anisotropy_energy(f)
        if lam > 0.0:
            e -= s2 * lam * dmi_energy(f)
        if use_stray:
            e += s2 * (1.0 - lam) * (f_vol(f, plan) - f_surf(f, plan))
        return e, f

    interior = np.zeros((field.nx, field.ny, 1))
    interior[1:-1, 1:-1, 0] = 1.0

    m = field.data.copy()
    energy, current = evaluate(m)
    trace = [energy]
    step = config.step0
    converged = False
    grad_sup = math.inf
    iterations = 0

    for it in range(1, config.max_iter + 1):
        grad = energy_gradient(current, params, plan) * interior
        grad_sup = float(np.sqrt(np.max(np.sum(grad * grad, axis=2))))
        if grad_sup <= config.grad_tol:
            converged = True
            break
        grad_norm2 = h * h * float(np.sum(grad * grad))

        step = min(step / config.backtrack, 1e3 * config.step0)
        accepted = False
        while step > 1e-18:
            candidate = m - step * grad
            norms = np.sqrt(np.sum(candidate * candidate, axis=2))
            drift = float(np.max(np.abs(norms - 1.0)))
            if it % config.renorm_every == 0 or drift > 1e-7:
                candidate /= norms[:, :, None]
            trial_energy, trial_field = evaluate(candidate)
            if trial_energy <= energy - config.armijo * step * grad_norm2:
                accepted = True
                break
            step *= config.backtrack
        if not accepted:
            break  # line search exhausted; report non-convergence

        m, energy, current = candidate, trial_energy, trial_field
        iterations = it
        trace.append(energy)
        if exchange_energy(current) >= _SIXTEEN_PI:
            raise RuntimeError("exchange energy reached 16 pi during descent")
        if topological_charge(current) != charge0:
            raise RuntimeError("topological charge changed during descent")

    final = SpinField(_normalize(m), h, field.origin, ring_tol=field.ring_tol)
    report = MinimizeReport(
        iterations=iterations,
        breakdown=total_energy(final, params, plan),
        trace=trace,
        charge=topological_charge(final),
        converged=converged,
        final_grad_norm=grad_sup,
    )
    return final, report
