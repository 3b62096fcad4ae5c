"""Grids of unit spins and the local (pointwise) energy terms.

A SpinField is a uniform 2-d grid of unit 3-vectors that tends to -e3 at the
boundary; the continuum picture extends it by -e3 outside the box.  This
module owns the field container and its binary format, the physical-to-
dimensionless parameter map, the stencil energies (exchange, easy-plane
anisotropy, DMI), the Berg-Luscher topological charge, and the pointwise
completed-square identity behind the 8*pi topological lower bound.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ._accel import njit, use_numba

__all__ = [
    "DegenerateTriangleError",
    "EnergyBreakdown",
    "EnergyParams",
    "SpinField",
    "anisotropy_energy",
    "charge_density",
    "completed_square_residual",
    "completed_square_terms",
    "dmi_energy",
    "exchange_energy",
    "from_physical",
    "load_field",
    "random_unit_field",
    "save_field",
    "topological_charge",
]

_MAGIC = b"SFLD"
_VERSION = 1
_NORM_REJECT = 1e-6


class DegenerateTriangleError(ValueError):
    """Three neighboring spins are pairwise antipodal; solid angle undefined."""


class SpinField:
    """Unit 3-vector field on an nx-by-ny grid with spacing h.

    data[i, j] is the spin at (origin[0] + i*h, origin[1] + j*h); the array
    is C-ordered, x index slow.  Constructors renormalize spins whose norm is
    within 1e-6 of unity and reject anything worse.  The outermost ring of
    cells must sit within ``ring_tol`` of -e3 (measured as |m + e3|).

    Parameters
    ----------
    data : (nx, ny, 3) array_like
    h : float
        Grid spacing, > 0.
    origin : (float, float)
        Position of the (0, 0) node.
    ring_tol : float
        Largest allowed boundary-ring deviation from -e3.
    """

    def __init__(self, data, h, origin=(0.0, 0.0), ring_tol=1e-3):
        data = np.array(data, dtype=float, order="C")
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError("data must have shape (nx, ny, 3)")
        nx, ny, _ = data.shape
        if nx < 4 or ny < 4:
            raise ValueError("grid must be at least 4x4")
        if not np.isfinite(h) or h <= 0:
            raise ValueError("spacing h must be positive")
        if not np.all(np.isfinite(data)):
            raise ValueError("field contains non-finite entries")
        norms = np.sqrt(np.sum(data * data, axis=2))
        dev = float(np.max(np.abs(norms - 1.0)))
        if dev > _NORM_REJECT:
            raise ValueError(f"spin norms deviate from 1 by up to {dev:.3e}")
        if dev > 1e-12:
            data /= norms[:, :, None]
        ring = ring_deviation(data)
        if ring > ring_tol:
            raise ValueError(
                f"boundary ring deviates from -e3 by {ring:.3e} (tolerance {ring_tol:.3e})"
            )
        self.data = data
        self.h = float(h)
        self.origin = (float(origin[0]), float(origin[1]))
        self.ring_tol = float(ring_tol)

    @property
    def nx(self) -> int:
        return self.data.shape[0]

    @property
    def ny(self) -> int:
        return self.data.shape[1]

    def xs(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    def copy(self) -> "SpinField":
        return SpinField(self.data.copy(), self.h, self.origin, self.ring_tol)

    def __repr__(self) -> str:  # pragma: no cover
        return f"SpinField({self.nx}x{self.ny}, h={self.h:g}, origin={self.origin})"


def ring_deviation(data: np.ndarray) -> float:
    """Largest |m + e3| over the outermost ring of cells."""
    e3 = np.array([0.0, 0.0, 1.0])
    edges = [data[0], data[-1], data[:, 0], data[:, -1]]
    return max(float(np.max(np.linalg.norm(e + e3, axis=-1))) for e in edges)


def save_field(field: SpinField, path) -> None:
    """Write the SFLD binary format (little-endian, version 1)."""
    header = struct.pack(
        "<4sIIIddd",
        _MAGIC,
        _VERSION,
        field.nx,
        field.ny,
        field.h,
        field.origin[0],
        field.origin[1],
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.data, dtype="<f8").tobytes())


def load_field(path) -> SpinField:
    """Read an SFLD file written by save_field."""
    with open(path, "rb") as fh:
        raw = fh.read()
    head = struct.calcsize("<4sIIIddd")
    if len(raw) < head:
        raise ValueError("truncated SFLD file")
    magic, version, nx, ny, h, ox, oy = struct.unpack("<4sIIIddd", raw[:head])
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise ValueError(f"unsupported SFLD version {version}")
    payload = np.frombuffer(raw[head:], dtype="<f8")
    if payload.size != nx * ny * 3:
        raise ValueError(f"payload has {payload.size} doubles, expected {nx * ny * 3}")
    data = payload.reshape(nx, ny, 3)
    return SpinField(data, h, (ox, oy), ring_tol=np.inf)


@dataclass(frozen=True)
class EnergyParams:
    """Dimensionless couplings: sigma > 0 and lam in [0, 1].

    sigma collects the anisotropy/DMI strength against exchange, lam is the
    DMI fraction of the non-exchange couplings.
    """

    sigma: float
    lam: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")

    @property
    def well_posed(self) -> bool:
        """Whether sigma^2 (1 + lam)^2 <= 2, the existence regime."""
        return self.sigma**2 * (1.0 + self.lam) ** 2 <= 2.0


def from_physical(q_factor: float, kappa: float, delta: float) -> EnergyParams:
    """Map material constants (Q, kappa, delta) to (sigma, lam).

    sigma = (|kappa| + delta)/sqrt(Q - 1), lam = |kappa|/(|kappa| + delta).
    kappa's sign only mirrors the texture (x -> -x), so it is dropped here.
    """
    if not np.isfinite(q_factor) or q_factor <= 1.0:
        raise ValueError("requires Q > 1")
    if delta < 0.0:
        raise ValueError("requires delta >= 0")
    kappa = abs(kappa)
    if kappa + delta <= 0.0:
        raise ValueError("requires |kappa| + delta > 0")
    return EnergyParams(
        sigma=(kappa + delta) / np.sqrt(q_factor - 1.0),
        lam=kappa / (kappa + delta),
    )


@dataclass(frozen=True)
class EnergyBreakdown:
    """Raw energy integrals plus the couplings that weight them.

    exchange = int |grad m|^2, anisotropy = int |m'|^2,
    dmi = int 2 m' . grad m3, f_vol / f_surf are the nonlocal terms.
    """

    exchange: float
    anisotropy: float
    dmi: float
    f_vol: float
    f_surf: float
    sigma: float
    lam: float

    @property
    def total(self) -> float:
        s2 = self.sigma**2
        return self.exchange + s2 * (
            self.anisotropy
            - self.lam * self.dmi
            + (1.0 - self.lam) * (self.f_vol - self.f_surf)
        )


# ---------------------------------------------------------------------------
# stencils: central differences inside, one-sided on the boundary ring


def _dx(a: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2.0 * h)
    out[0] = (a[1] - a[0]) / h
    out[-1] = (a[-1] - a[-2]) / h
    return out


def _dy(a: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(a)
    out[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2.0 * h)
    out[:, 0] = (a[:, 1] - a[:, 0]) / h
    out[:, -1] = (a[:, -1] - a[:, -2]) / h
    return out


def _dxt(u: np.ndarray, h: float) -> np.ndarray:
    """Adjoint of _dx under the plain (unweighted) grid inner product."""
    v = np.zeros_like(u)
    v[2:] += u[1:-1] / (2.0 * h)
    v[:-2] -= u[1:-1] / (2.0 * h)
    v[1] += u[0] / h
    v[0] -= u[0] / h
    v[-1] += u[-1] / h
    v[-2] -= u[-1] / h
    return v


def _dyt(u: np.ndarray, h: float) -> np.ndarray:
    v = np.zeros_like(u)
    v[:, 2:] += u[:, 1:-1] / (2.0 * h)
    v[:, :-2] -= u[:, 1:-1] / (2.0 * h)
    v[:, 1] += u[:, 0] / h
    v[:, 0] -= u[:, 0] / h
    v[:, -1] += u[:, -1] / h
    v[:, -2] -= u[:, -1] / h
    return v


def exchange_energy(field: SpinField) -> float:
    """Dirichlet energy int |grad m|^2 by the shared stencils, h^2 weights."""
    gx = _dx(field.data, field.h)
    gy = _dy(field.data, field.h)
    return field.h**2 * float(np.sum(gx * gx) + np.sum(gy * gy))


def anisotropy_energy(field: SpinField) -> float:
    """Easy-plane penalty int |m'|^2 (in-plane components squared)."""
    m = field.data
    return field.h**2 * float(np.sum(m[:, :, 0] ** 2 + m[:, :, 1] ** 2))


def dmi_energy(field: SpinField) -> float:
    """Raw DMI integral int 2 m' . grad m3 (unweighted by sigma, lam)."""
    m = field.data
    g3x = _dx(m[:, :, 2], field.h)
    g3y = _dy(m[:, :, 2], field.h)
    return 2.0 * field.h**2 * float(np.sum(m[:, :, 0] * g3x + m[:, :, 1] * g3y))


# ---------------------------------------------------------------------------
# Berg-Luscher charge on the lattice, closed off by a virtual -e3 ring


@njit(cache=True)
def _charge_sum_numba(p):
    total = 0.0
    bad = False
    nxp, nyp = p.shape[0], p.shape[1]
    for i in range(nxp - 1):
        for j in range(nyp - 1):
            for tri in range(2):
                if tri == 0:
                    a0, a1, a2 = p[i, j, 0], p[i, j, 1], p[i, j, 2]
                    b0, b1, b2 = p[i + 1, j, 0], p[i + 1, j, 1], p[i + 1, j, 2]
                    c0, c1, c2 = p[i + 1, j + 1, 0], p[i + 1, j + 1, 1], p[i + 1, j + 1, 2]
                else:
                    a0, a1, a2 = p[i, j, 0], p[i, j, 1], p[i, j, 2]
                    b0, b1, b2 = p[i + 1, j + 1, 0], p[i + 1, j + 1, 1], p[i + 1, j + 1, 2]
                    c0, c1, c2 = p[i, j + 1, 0], p[i, j + 1, 1], p[i, j + 1, 2]
                cx = b1 * c2 - b2 * c1
                cy = b2 * c0 - b0 * c2
                cz = b0 * c1 - b1 * c0
                num = a0 * cx + a1 * cy + a2 * cz
                den = (
                    1.0
                    + (a0 * b0 + a1 * b1 + a2 * b2)
                    + (b0 * c0 + b1 * c1 + b2 * c2)
                    + (c0 * a0 + c1 * a1 + c2 * a2)
                )
                if den < 1e-12 and abs(num) < 1e-12:
                    bad = True
                total += 2.0 * np.arctan2(num, den)
    return total, bad


def _charge_sum_numpy(p):
    a = p[:-1, :-1]
    b = p[1:, :-1]
    c = p[1:, 1:]
    d = p[:-1, 1:]
    total = 0.0
    bad = False
    for u, v, w in ((a, b, c), (a, c, d)):
        cross = np.cross(v, w)
        num = np.sum(u * cross, axis=-1)
        den = (
            1.0
            + np.sum(u * v, axis=-1)
            + np.sum(v * w, axis=-1)
            + np.sum(w * u, axis=-1)
        )
        bad = bad or bool(np.any((den < 1e-12) & (np.abs(num) < 1e-12)))
        total += float(np.sum(2.0 * np.arctan2(num, den)))
    return total, bad


def topological_charge(field: SpinField) -> int:
    """Integer degree via per-plaquette solid angles.

    The grid is closed off with one virtual ring of -e3 spins, so the sum of
    oriented solid angles is an exact multiple of 4*pi for any admissible
    field, not just well-resolved ones.
    """
    nx, ny = field.nx, field.ny
    padded = np.empty((nx + 2, ny + 2, 3))
    padded[:, :] = (0.0, 0.0, -1.0)
    padded[1:-1, 1:-1] = field.data
    if use_numba():
        total, bad = _charge_sum_numba(padded)
    else:
        total, bad = _charge_sum_numpy(padded)
    if bad:
        raise DegenerateTriangleError("antipodal spin triangle; charge undefined")
    q = total / (4.0 * np.pi)
    qi = round(q)
    if abs(q - qi) > 1e-6:
        raise ValueError(f"solid angle sum is not a multiple of 4*pi (got {q!r})")
    return int(qi)


def charge_density(field: SpinField) -> np.ndarray:
    """Pointwise m . (dx m x dy m) / 4 pi on the grid (diagnostic)."""
    m = field.data
    gx = _dx(m, field.h)
    gy = _dy(m, field.h)
    return np.sum(m * np.cross(gx, gy), axis=-1) / (4.0 * np.pi)


# ---------------------------------------------------------------------------
# completed square behind the topological bound


def completed_square_terms(field: SpinField, sign: int):
    """Pointwise LHS and RHS grids of the completed-square identity.

    With tangentially projected stencil derivatives d1, d2 (the continuum
    derivatives of a unit field are tangent, the raw stencil ones are not):

        |d1|^2 + |d2|^2 - 2*sign * m.(d1 x d2) = |d1 + sign * m x d2|^2

    sign=+1 is the combination that vanishes identically on charge +1
    Belavin-Polyakov profiles.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    m = field.data
    d1 = _dx(m, field.h)
    d2 = _dy(m, field.h)
    d1 = d1 - np.sum(d1 * m, axis=-1, keepdims=True) * m
    d2 = d2 - np.sum(d2 * m, axis=-1, keepdims=True) * m
    lhs = (
        np.sum(d1 * d1, axis=-1)
        + np.sum(d2 * d2, axis=-1)
        - 2.0 * sign * np.sum(m * np.cross(d1, d2), axis=-1)
    )
    sq = d1 + sign * np.cross(m, d2)
    rhs = np.sum(sq * sq, axis=-1)
    return lhs, rhs


def completed_square_residual(field: SpinField, sign: int) -> float:
    """Max pointwise |LHS - RHS| of the completed-square identity."""
    lhs, rhs = completed_square_terms(field, sign)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------


def random_unit_field(rng, nx: int, ny: int, h: float = 0.5, smooth: int = 0) -> SpinField:
    """Random unit spins with the ring clamped to -e3 (test corpora)."""
    data = rng.standard_normal((nx, ny, 3))
    for _ in range(smooth):
        data = 0.25 * (
            np.roll(data, 1, axis=0)
            + np.roll(data, -1, axis=0)
            + np.roll(data, 1, axis=1)
            + np.roll(data, -1, axis=1)
        )
    norms = np.linalg.norm(data, axis=-1, keepdims=True)
    # a standard normal 3-vector is essentially never this short, but the
    # smoothing passes can cancel; re-draw those cells unsmoothed
    tiny = norms[:, :, 0] < 1e-3
    if np.any(tiny):
        data[tiny] = rng.standard_normal((int(np.sum(tiny)), 3))
        norms = np.linalg.norm(data, axis=-1, keepdims=True)
    data /= norms
    data[0] = data[-1] = (0.0, 0.0, -1.0)
    data[:, 0] = data[:, -1] = (0.0, 0.0, -1.0)
    return SpinField(data, h)
