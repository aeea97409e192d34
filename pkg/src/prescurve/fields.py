"""Prescribed curvature functions and vector potentials with matching divergence.

A curvature function splits as constant + periodic (zero mean on the unit
cell) + radially decaying.  For each part there is a potential construction:

* periodic: spectral Poisson solve on the unit cell,
* decaying radial: one-dimensional quadrature of the radial Poisson solution,
* constant c: the linear field c*p/2.

The assembled :class:`VectorPotential` satisfies ``div Q = H``.  Note the
Poisson solvers themselves return the gradient of the solution of
``-lap v = H`` (for which ``div grad v = -H``); the assembly step flips the
sign so the divergence identity holds for the composite field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.interpolate import CubicSpline

from .errors import NonIntegrable, NonZeroMean

__all__ = [
    "CurvatureField",
    "RadialDecaying",
    "RadialCurvature",
    "VectorPotential",
    "mean_unit_cell",
    "solve_torus_poisson",
    "lorentz_norm_21",
    "solve_plane_poisson_decaying",
    "radial_potential",
    "build_potential",
    "q_eval",
    "field_value",
    "periodic_from_callable",
    "read_field",
    "read_radial_curvature",
    "write_field",
]

#: Sharp constant of the periodic-cell gradient bound.
TORUS_GRADIENT_CONSTANT = math.sqrt(2.0) / 8.0
#: Sharp constant of the decaying-case gradient bound.
PLANE_GRADIENT_CONSTANT = (math.pi / 2.0) ** 1.5
#: Admissibility threshold for the periodic oscillation.
PERIODIC_ADMISSIBLE_SUP = 2.0 * math.sqrt(2.0)
#: Admissibility threshold for the decaying rearranged-integral norm.
DECAYING_ADMISSIBLE_NORM = (2.0 / math.pi) ** 1.5


class _PeriodicSpline2D:
    """Cubic B-spline interpolation of unit-cell data, exactly 1-periodic.

    ``grid[i, j]`` is the value at ``(i/M, j/M)``.
    """

    def __init__(self, grid: np.ndarray):
        self.m = grid.shape[0]
        self._coeffs = ndimage.spline_filter(grid, order=3, mode="grid-wrap")

    def __call__(self, x, y):
        m = self.m
        coords = np.stack(
            [np.asarray(x, dtype=float) * m, np.asarray(y, dtype=float) * m]
        )
        return ndimage.map_coordinates(
            self._coeffs, coords, order=3, mode="grid-wrap", prefilter=False
        )


class RadialDecaying:
    """A radial function r -> h2(r) tending to zero, tabulated or callable."""

    def __init__(self, func=None, table=None, r_max=None):
        if (func is None) == (table is None):
            raise ValueError("give exactly one of func= or table=(r, values)")
        self._func = func
        if table is not None:
            r, vals = (np.asarray(a, dtype=float) for a in table)
            if r.ndim != 1 or r.shape != vals.shape or len(r) < 4:
                raise ValueError("table must be two matching 1-d arrays")
            self._spline = CubicSpline(r, vals)
            self._table_r = r
            self._table_v = vals
            self.r_max = float(r[-1]) if r_max is None else float(r_max)
        else:
            self._spline = None
            self.r_max = float(r_max) if r_max is not None else self._probe_range()

    def _probe_range(self) -> float:
        peak = max(abs(self._func(np.linspace(1e-6, 1.0, 64))).max(), 1e-300)
        r = 1.0
        while r < 1e6:
            band = abs(self._func(np.linspace(r, 2 * r, 64)))
            if band.max() <= 1e-9 * peak:
                return 2 * r
            r *= 2
        raise NonIntegrable("radial part does not decay within r <= 1e6")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self._func is not None:
            return np.asarray(self._func(r), dtype=float)
        out = np.where(r <= self.r_max, self._spline(np.minimum(r, self.r_max)), 0.0)
        return out

    def linf(self, nr: int = 4096) -> float:
        r = np.linspace(0.0, self.r_max, nr)
        r[0] = min(1e-9, self.r_max / nr)
        return float(np.abs(self(r)).max())


@dataclass(frozen=True)
class CurvatureField:
    """Curvature H = constant + periodic(p) + decaying(|p|).

    ``periodic`` is an M x M grid of zero-mean values on the unit cell
    (``periodic[i, j] = H1(i/M, j/M)``); use :meth:`from_parts` to fold a
    nonzero grid mean into the constant.  ``radial`` tends to zero at
    infinity.  ``smoothness`` is a free-form tag recording what the caller
    knows about regularity.
    """

    constant: float = 0.0
    periodic: np.ndarray | None = field(default=None, repr=False)
    radial: RadialDecaying | None = None
    smoothness: str = "C2"

    def __post_init__(self):
        if self.periodic is not None:
            grid = np.ascontiguousarray(self.periodic, dtype=float)
            if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
                raise ValueError("periodic part must be a square grid")
            scale = max(np.abs(grid).max(), abs(self.constant), 1.0)
            if abs(grid.mean()) > 1e-12 * scale:
                raise ValueError(
                    "periodic grid must have zero mean; use from_parts() to "
                    "fold the mean into the constant"
                )
            object.__setattr__(self, "periodic", grid)
            object.__setattr__(self, "_spline", _PeriodicSpline2D(grid))
        else:
            object.__setattr__(self, "_spline", None)

    @classmethod
    def from_parts(cls, constant=0.0, periodic=None, radial=None, smoothness="C2"):
        if periodic is not None:
            periodic = np.asarray(periodic, dtype=float)
            constant = float(constant) + float(periodic.mean())
            periodic = periodic - periodic.mean()
        return cls(
            constant=float(constant),
            periodic=periodic,
            radial=radial,
            smoothness=smoothness,
        )

    def value(self, points) -> np.ndarray:
        """Evaluate H at an (..., 2) array of plane points."""
        pts = np.asarray(points, dtype=float)
        out = np.full(pts.shape[:-1], self.constant)
        if self.periodic is not None:
            out = out + self._spline(pts[..., 0], pts[..., 1])
        if self.radial is not None:
            out = out + self.radial(np.hypot(pts[..., 0], pts[..., 1]))
        return out

    def periodic_oscillation(self) -> float:
        """max - min of the periodic part over the grid (0 if absent)."""
        if self.periodic is None:
            return 0.0
        return float(self.periodic.max() - self.periodic.min())

    def periodic_sup(self) -> float:
        return 0.0 if self.periodic is None else float(np.abs(self.periodic).max())

    def zero_mean_sup(self) -> float:
        """Upper bound on sup |H - constant|."""
        rad = 0.0 if self.radial is None else self.radial.linf()
        return self.periodic_sup() + rad

    def sup_norm(self) -> float:
        return abs(self.constant) + self.zero_mean_sup()

    def admissibility(self) -> dict:
        """The theory's smallness hypotheses, reported but not enforced."""
        report = {}
        if self.periodic is not None:
            sup = self.periodic_sup()
            report["periodic_sup"] = sup
            report["periodic_ok"] = sup < PERIODIC_ADMISSIBLE_SUP
        if self.radial is not None:
            norm = lorentz_norm_21(self.radial)
            report["lorentz_21"] = norm
            report["decaying_ok"] = norm < DECAYING_ADMISSIBLE_NORM
        if self.periodic is not None and self.radial is not None:
            combined = (
                math.sqrt(2.0) / 4.0 * report["periodic_sup"]
                + PLANE_GRADIENT_CONSTANT * report["lorentz_21"]
            )
            report["combined"] = combined
            report["combined_ok"] = combined < 1.0
        return report


@dataclass(frozen=True)
class RadialCurvature:
    """Radial curvature h(s) = 1 + A/s^gamma + htilde(s)/s^(gamma+beta) for
    s >= s0, extended below s0 by the C^2 even polynomial matching value and
    two derivatives at s0.

    ``beta=None`` (with ``htilde=None``) means no correction term at all.
    For ``beta == 0`` the effective amplitude switches to A + B, where B is
    the limit of htilde at infinity.
    """

    A: float
    gamma: float
    beta: float | None = None
    htilde: object = None
    s0: float = 1.0

    def __post_init__(self):
        if self.A == 0.0:
            raise ValueError("amplitude A must be nonzero")
        if not self.gamma > 1.0:
            raise ValueError("gamma must be > 1")
        if self.s0 <= 0.0:
            raise ValueError("mollification radius s0 must be positive")
        if (self.htilde is None) != (self.beta is None):
            raise ValueError("give both beta and htilde, or neither")
        if self.beta is not None and self.beta < 0.0:
            raise ValueError("beta must be >= 0")
        h0 = self._outer(self.s0)
        h1 = self._outer_d1(self.s0)
        h2 = self._outer_d2(self.s0)
        s0 = self.s0
        mat = np.array(
            [
                [1.0, s0**2, s0**4],
                [0.0, 2.0 * s0, 4.0 * s0**3],
                [0.0, 2.0, 12.0 * s0**2],
            ]
        )
        coeffs = np.linalg.solve(mat, np.array([h0, h1, h2]))
        object.__setattr__(self, "_poly", coeffs)

    def _outer(self, s):
        s = np.asarray(s, dtype=float)
        out = 1.0 + self.A / s**self.gamma
        if self.htilde is not None:
            out = out + np.asarray(self.htilde(s)) / s ** (self.gamma + self.beta)
        return out

    def _outer_d1(self, s, step=1e-5):
        d = -self.gamma * self.A / s ** (self.gamma + 1.0)
        if self.htilde is not None:
            g = self.gamma + self.beta
            ht = float(self.htilde(s))
            htp = (float(self.htilde(s + step)) - float(self.htilde(s - step))) / (
                2 * step
            )
            d += htp / s**g - g * ht / s ** (g + 1.0)
        return d

    def _outer_d2(self, s, step=1e-5):
        d = self.gamma * (self.gamma + 1.0) * self.A / s ** (self.gamma + 2.0)
        if self.htilde is not None:
            g = self.gamma + self.beta
            ht = float(self.htilde(s))
            htp = (float(self.htilde(s + step)) - float(self.htilde(s - step))) / (
                2 * step
            )
            htpp = (
                float(self.htilde(s + step))
                - 2 * ht
                + float(self.htilde(s - step))
            ) / step**2
            d += (
                htpp / s**g
                - 2.0 * g * htp / s ** (g + 1.0)
                + g * (g + 1.0) * ht / s ** (g + 2.0)
            )
        return d

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inner = s < self.s0
        c0, c2, c4 = self._poly
        s_safe = np.where(inner, self.s0, s)  # keep powers finite at s=0
        out = np.where(inner, c0 + c2 * s**2 + c4 * s**4, self._outer(s_safe))
        return out

    def value(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self(np.hypot(pts[..., 0], pts[..., 1]))

    @property
    def tilde_amplitude(self) -> float:
        """A for beta > 0 (or no correction); A + lim htilde for beta = 0."""
        if self.beta is not None and self.beta == 0.0:
            return self.A + float(self.htilde(1e9))
        return self.A


def field_value(field_like, points) -> np.ndarray:
    """Evaluate a curvature given as a field object, callable, or constant."""
    if hasattr(field_like, "value"):
        return field_like.value(points)
    pts = np.asarray(points, dtype=float)
    if callable(field_like):
        return np.asarray(field_like(pts), dtype=float)
    return np.full(pts.shape[:-1], float(field_like))


def periodic_from_callable(func, m: int = 256) -> np.ndarray:
    """Sample a unit-cell-periodic callable on the M x M grid."""
    x = np.arange(m) / m
    xx, yy = np.meshgrid(x, x, indexing="ij")
    return np.asarray(func(xx, yy), dtype=float)


def mean_unit_cell(grid) -> float:
    """Average of a periodic unit-cell sample grid (trapezoid = plain mean)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    return float(grid.mean())


def solve_torus_poisson(grid: np.ndarray) -> np.ndarray:
    """Spectral gradient of the unit-cell Poisson solution of -lap v = H.

    ``grid`` must have zero mean.  Returns the (M, M, 2) array of grad v at
    the grid nodes; the zero mode of v is set to zero.
    """
    grid = np.asarray(grid, dtype=float)
    m = grid.shape[0]
    sup = max(np.abs(grid).max(), 1e-300)
    if abs(grid.mean()) > 1e-10 * sup:
        raise NonZeroMean(f"cell mean {grid.mean():.3e} exceeds 1e-10 * sup")
    hhat = np.fft.fft2(grid)
    k = np.fft.fftfreq(m, d=1.0 / m)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    k2 = kx**2 + ky**2
    with np.errstate(divide="ignore", invalid="ignore"):
        vhat = np.where(k2 > 0, hhat / (4.0 * np.pi**2 * k2), 0.0)
    gx = np.fft.ifft2(2j * np.pi * kx * vhat).real
    gy = np.fft.ifft2(2j * np.pi * ky * vhat).real
    return np.stack([gx, gy], axis=-1)


def lorentz_norm_21(h2, nr: int = 8192) -> float:
    """Rearranged integral norm: sort |h2| against annulus measure and
    integrate the decreasing rearrangement against t^(-1/2)."""
    if not isinstance(h2, RadialDecaying):
        h2 = RadialDecaying(func=h2) if callable(h2) else RadialDecaying(table=h2)
    edges = np.linspace(0.0, h2.r_max, nr + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    vals = np.abs(h2(mids))
    weights = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    tcum = np.concatenate([[0.0], np.cumsum(weights[order])])
    return float(np.sum(vals * 2.0 * (np.sqrt(tcum[1:]) - np.sqrt(tcum[:-1]))))


def _cumulative_integral(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative integral on a uniform grid, Simpson where available."""
    try:
        from scipy.integrate import cumulative_simpson

        return cumulative_simpson(y, x=x, initial=0.0)
    except ImportError:  # older scipy
        from scipy.integrate import cumulative_trapezoid

        return np.concatenate([[0.0], cumulative_trapezoid(y, x)])


def solve_plane_poisson_decaying(h2, nr: int = 8192, r_max=None):
    """Radial derivative of the plane Poisson solution of -lap v = H2.

    Returns ``(r, vprime)`` with ``vprime(r) = -(1/r) * int_0^r s H2(s) ds``
    tabulated on a dense grid.  Raises ``NonIntegrable`` when the tail
    integral has visibly not settled at the end of the range.
    """
    if not isinstance(h2, RadialDecaying):
        h2 = RadialDecaying(func=h2) if callable(h2) else RadialDecaying(table=h2)
    rmax = float(r_max) if r_max is not None else max(2.0 * h2.r_max, 1.0)
    r = np.linspace(0.0, rmax, nr)
    integrand = r * h2(r)
    cum = _cumulative_integral(integrand, r)
    scale = max(np.abs(cum).max(), 1e-300)
    tail_drift = abs(cum[-1] - cum[int(0.9 * nr)])
    if tail_drift > 1e-6 * scale and abs(integrand[-1]) > 1e-9 * scale / rmax:
        raise NonIntegrable(
            f"tail of int s*H2 ds still drifting by {tail_drift:.3e} at r={rmax:g}"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        vprime = np.where(r > 0, -cum / np.where(r > 0, r, 1.0), 0.0)
    return r, vprime


@dataclass(frozen=True)
class VectorPotential:
    """Composite field Q with div Q = H.

    Parts: cubic-spline interpolated periodic gradient (divergence equal to
    the periodic part of H), radial profile ``Q = radial_f(|p|) p/|p|``
    (divergence equal to the decaying part), and the linear field
    ``linear_coefficient * p / 2``.
    """

    periodic_gradient: np.ndarray | None = field(default=None, repr=False)
    radial_r: np.ndarray | None = field(default=None, repr=False)
    radial_f: np.ndarray | None = field(default=None, repr=False)
    linear_coefficient: float = 0.0
    interp_order: int = 3

    def __post_init__(self):
        if self.periodic_gradient is not None:
            g = np.ascontiguousarray(self.periodic_gradient, dtype=float)
            if g.ndim != 3 or g.shape[2] != 2 or g.shape[0] != g.shape[1]:
                raise ValueError("periodic_gradient must have shape (M, M, 2)")
            object.__setattr__(self, "periodic_gradient", g)
            object.__setattr__(
                self,
                "_splines",
                (_PeriodicSpline2D(g[:, :, 0]), _PeriodicSpline2D(g[:, :, 1])),
            )
        else:
            object.__setattr__(self, "_splines", None)
        if (self.radial_r is None) != (self.radial_f is None):
            raise ValueError("radial_r and radial_f must come together")
        if self.radial_r is not None:
            r = np.asarray(self.radial_r, dtype=float)
            f = np.asarray(self.radial_f, dtype=float)
            object.__setattr__(self, "_radial_spline", CubicSpline(r, f))
            object.__setattr__(self, "_radial_rmax", float(r[-1]))
            object.__setattr__(self, "_radial_tail", float(f[-1]) * float(r[-1]))
        else:
            object.__setattr__(self, "_radial_spline", None)

    def sup_periodic(self) -> float:
        if self.periodic_gradient is None:
            return 0.0
        g = self.periodic_gradient
        return float(np.hypot(g[:, :, 0], g[:, :, 1]).max())

    def sup_radial(self) -> float:
        if self.radial_f is None:
            return 0.0
        return float(np.abs(self.radial_f).max())

    def sup_zero_mean(self) -> float:
        """Upper bound on the sup norm of the non-linear (zero-mean) part."""
        return self.sup_periodic() + self.sup_radial()

    def radial_profile(self, r) -> np.ndarray:
        """The scalar f with radial part f(|p|) p / |p|; 1/r tail beyond the
        tabulated range."""
        r = np.asarray(r, dtype=float)
        inside = self._radial_spline(np.minimum(r, self._radial_rmax))
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = self._radial_tail / np.where(r > 0, r, 1.0)
        return np.where(r <= self._radial_rmax, inside, tail)


def q_eval(potential: VectorPotential, points) -> np.ndarray:
    """Evaluate Q at an (..., 2) array of plane points."""
    pts = np.asarray(points, dtype=float)
    out = 0.5 * potential.linear_coefficient * pts
    if potential._splines is not None:
        sx, sy = potential._splines
        out = out + np.stack(
            [sx(pts[..., 0], pts[..., 1]), sy(pts[..., 0], pts[..., 1])], axis=-1
        )
    if potential._radial_spline is not None:
        r = np.hypot(pts[..., 0], pts[..., 1])
        f = potential.radial_profile(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > 0, f / np.where(r > 0, r, 1.0), 0.0)
        out = out + scale[..., None] * pts
    return out


def build_potential(field_: CurvatureField) -> VectorPotential:
    """Construct the divergence-compatible potential of a curvature field.

    Flips the sign of the Poisson-solution gradients so that div Q = +H.
    """
    periodic_gradient = None
    if field_.periodic is not None:
        periodic_gradient = -solve_torus_poisson(field_.periodic)
    radial_r = radial_f = None
    if field_.radial is not None:
        radial_r, vprime = solve_plane_poisson_decaying(field_.radial)
        radial_f = -vprime
    return VectorPotential(
        periodic_gradient=periodic_gradient,
        radial_r=radial_r,
        radial_f=radial_f,
        linear_coefficient=field_.constant,
    )


def radial_potential(h: RadialCurvature, r_max: float = 100.0, nr: int = 32768):
    """Potential of a radial curvature profile via the defining quadrature
    Q(p) = ((1/|p|) int_0^|p| h(s) s ds) p/|p|.

    The asymptotically constant part contributes the linear term p/2; the
    decaying remainder is tabulated.
    """
    r = np.linspace(0.0, r_max, nr)
    decay = np.empty_like(r)
    integrand = r * (h(r) - 1.0)
    cum = _cumulative_integral(integrand, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        decay = np.where(r > 0, cum / np.where(r > 0, r, 1.0), 0.0)
    return VectorPotential(radial_r=r, radial_f=decay, linear_coefficient=1.0)


def read_field(path) -> CurvatureField:
    """Read a field file: JSON with optional keys
    {"constant", "periodic_grid", "radial": {"r": [...], "h": [...]}}."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    radial = None
    if doc.get("radial") is not None:
        radial = RadialDecaying(table=(doc["radial"]["r"], doc["radial"]["h"]))
    return CurvatureField.from_parts(
        constant=float(doc.get("constant", 0.0)),
        periodic=doc.get("periodic_grid"),
        radial=radial,
    )


def read_radial_curvature(path) -> RadialCurvature:
    """Read the "radial_params" block of a field file as a RadialCurvature."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    params = doc.get("radial_params")
    if params is None:
        raise ValueError(f"{path}: no 'radial_params' block")
    return RadialCurvature(
        A=float(params["A"]),
        gamma=float(params["gamma"]),
        beta=params.get("beta"),
        htilde=None,
        s0=float(params.get("s0", 1.0)),
    )


def write_field(field_: CurvatureField, path, radial_params: dict | None = None):
    doc: dict = {"constant": float(field_.constant)}
    if field_.periodic is not None:
        doc["periodic_grid"] = [[float(v) for v in row] for row in field_.periodic]
    if field_.radial is not None:
        r = np.linspace(0.0, field_.radial.r_max, 512)
        doc["radial"] = {
            "r": [float(v) for v in r],
            "h": [float(v) for v in field_.radial(r)],
        }
    if radial_params is not None:
        doc["radial_params"] = radial_params
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
