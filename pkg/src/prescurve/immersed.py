"""Immersed loops with prescribed radial curvature via finite reduction.

The two-frequency ansatz R e^{i t/n} + e^{i t} (mirrored for negative
amplitudes) is perturbed along its normal by a scalar profile.  The
construction splits the curvature equation into the part orthogonal to the
kernel of phi'' + phi, solved by a contraction fixed point, and the kernel
component, removed by root-finding in the radius parameter:

1. for fixed (n, R), iterate phi <- Linv P (L phi - G(phi)) with
   G(phi) = K(u + phi nu) - H(u + phi nu) until the update stalls,
   leaving G = lambda1 cos + lambda2 sin;
2. bisect in r (with R = (r n)^(1/(gamma+2))) until lambda1 vanishes;
3. lambda2 vanishes by the rotational symmetry of the energy, which the
   even parity of the iteration preserves exactly.

All quantities here are scalar functions of one 2 pi-periodic variable:
the ansatz is only rotation-covariant over that period, but its speed,
curvature and distance from the origin are genuinely periodic, so the
whole solve runs on a single period with closed-form ansatz derivatives
and spectral derivatives of the profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import ClosedCurve, trig_resample
from .errors import (
    DegenerateSpeed,
    MaxIterationsExceeded,
    NoSignChange,
    NotContracting,
)
from .fields import RadialCurvature

__all__ = [
    "AnsatzParams",
    "PeriodicScalar",
    "LSResult",
    "LSConfig",
    "ansatz_eval",
    "linf_apply",
    "linf_invert_perp",
    "project_perp",
    "curvature_gap",
    "fixed_point_solve",
    "find_radius",
    "verify_second_multiplier",
    "build_immersed_loop",
    "linearized_coeffs",
]


@dataclass(frozen=True)
class AnsatzParams:
    """Loop count n and inner radius R of the two-frequency ansatz.

    ``mirror`` selects the family winding the opposite way, used for
    negative amplitudes.
    """

    n: int
    R: float
    mirror: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        if not (0.0 < self.R < self.n):
            raise ValueError("need 0 < R < n")

    @property
    def rescale(self) -> int:
        """Denominator m of the rescaled frequencies (n -+ 1)."""
        return self.n + 1 if self.mirror else self.n - 1

    @property
    def sign(self) -> int:
        return -1 if self.mirror else 1


@dataclass(frozen=True)
class PeriodicScalar:
    """2 pi-periodic real function sampled at N >= 64 uniform nodes."""

    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=float)
        if samples.ndim != 1 or len(samples) < 64 or len(samples) % 2:
            raise ValueError("need an even number of samples >= 64")
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return len(self.samples)

    def deriv(self, order: int = 1) -> np.ndarray:
        return _sderiv(self.samples, order)

    def mode(self, k: int) -> complex:
        coef = np.fft.rfft(self.samples) / self.n
        return complex(coef[k]) if k <= self.n // 2 else 0.0

    def sup(self) -> float:
        return float(np.abs(self.samples).max())


@dataclass(frozen=True)
class LSResult:
    n: int
    R: float
    r: float
    mirror: bool
    phi: PeriodicScalar
    lambda1: float
    lambda2: float
    residual: float
    iterations: int
    bisections: int
    trace: tuple
    converged: bool


@dataclass(frozen=True)
class LSConfig:
    num_samples: int = 512
    tol_fp: float = 1e-10
    tol_root: float = 1e-8
    max_iter: int = 200
    max_bisect: int = 200
    r_bracket: tuple | None = None
    samples_per_loop: int = 64


def _sderiv(values: np.ndarray, order: int) -> np.ndarray:
    """Spectral derivative of 2 pi-periodic samples."""
    n = len(values)
    coef = np.fft.rfft(values)
    k = np.arange(n // 2 + 1, dtype=float)
    factor = (1j * k) ** order
    if order % 2:
        factor[-1] = 0.0
    return np.fft.irfft(coef * factor, n=n)


class _Frame:
    """Closed-form ansatz data at sample nodes, as complex arrays."""

    __slots__ = ("t", "u", "du", "d2u", "d3u", "nu", "dnu", "d2nu", "speed")

    def __init__(self, params: AnsatzParams, t: np.ndarray, rescaled: bool = True):
        n, R, sgn = params.n, params.R, params.sign
        m = params.rescale if rescaled else n
        w1 = sgn / m            # slow frequency
        w2 = (n / m) if rescaled else 1.0
        e1 = np.exp(1j * w1 * t)
        e2 = np.exp(1j * w2 * t)
        self.t = t
        self.u = R * e1 + e2
        self.du = R * 1j * w1 * e1 + 1j * w2 * e2
        self.d2u = -R * w1**2 * e1 - w2**2 * e2
        self.d3u = -R * 1j * w1**3 * e1 - 1j * w2**3 * e2
        s = np.abs(self.du)
        self.speed = s
        self.nu = 1j * self.du / s
        dot12 = (self.du.conjugate() * self.d2u).real
        self.dnu = 1j * self.d2u / s - dot12 * 1j * self.du / s**3
        dot13 = (self.du.conjugate() * self.d3u).real
        abs2sq = np.abs(self.d2u) ** 2
        self.d2nu = (
            1j * self.d3u / s
            - 2.0 * dot12 * 1j * self.d2u / s**3
            - (abs2sq + dot13) * 1j * self.du / s**3
            + 3.0 * dot12**2 * 1j * self.du / s**5
        )


def ansatz_eval(params: AnsatzParams, num_samples: int = 512):
    """Sampled ansatz data on one 2 pi period of the rescaled variable.

    Returns a dict with the curve, its first three derivatives, the unit
    normal with two derivatives, and the speed, all as complex arrays.
    """
    t = 2.0 * np.pi * np.arange(num_samples) / num_samples
    fr = _Frame(params, t)
    return {
        "t": t,
        "u": fr.u,
        "du": fr.du,
        "d2u": fr.d2u,
        "d3u": fr.d3u,
        "normal": fr.nu,
        "dnormal": fr.dnu,
        "d2normal": fr.d2nu,
        "speed": fr.speed,
    }


def linf_apply(phi: np.ndarray) -> np.ndarray:
    """The model operator phi'' + phi, applied as the single per-mode
    symbol (1 - k^2) so the kernel modes are annihilated exactly."""
    phi = np.asarray(phi, dtype=float)
    coef = np.fft.rfft(phi)
    k = np.arange(len(coef), dtype=float)
    return np.fft.irfft(coef * (1.0 - k**2), n=len(phi))


def project_perp(f: np.ndarray) -> np.ndarray:
    """Remove the cos t and sin t modes."""
    coef = np.fft.rfft(np.asarray(f, dtype=float))
    coef[1] = 0.0
    return np.fft.irfft(coef, n=len(f))


def linf_invert_perp(f: np.ndarray) -> np.ndarray:
    """Solve phi'' + phi = P f with phi orthogonal to cos and sin.

    Mode k maps to 1/(1 - k^2); the kernel modes are projected away, so the
    identity L(Linv f) = P f holds exactly on the truncated spectrum.
    """
    f = np.asarray(f, dtype=float)
    coef = np.fft.rfft(f)
    k = np.arange(len(coef), dtype=float)
    coef[1] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        coef[2:] = coef[2:] / (1.0 - k[2:] ** 2)
    return np.fft.irfft(coef, n=len(f))


def _gap(frame: _Frame, phi: np.ndarray, h: RadialCurvature) -> np.ndarray:
    """K - H of the normal perturbation u + phi * normal, sampled."""
    dphi = _sderiv(phi, 1)
    d2phi = _sderiv(phi, 2)
    w = frame.u + phi * frame.nu
    dw = frame.du + dphi * frame.nu + phi * frame.dnu
    d2w = frame.d2u + d2phi * frame.nu + 2.0 * dphi * frame.dnu + phi * frame.d2nu
    speed = np.abs(dw)
    if speed.min() <= 1e-12 * speed.max():
        raise DegenerateSpeed("normal perturbation destroys regularity")
    kappa = (dw.conjugate() * d2w).imag / speed**3
    return kappa - h(np.abs(w))


def curvature_gap(
    params: AnsatzParams, phi, h: RadialCurvature, num_samples: int | None = None
) -> PeriodicScalar:
    """Sampled curvature gap K(u + phi nu) - H(u + phi nu)."""
    if isinstance(phi, PeriodicScalar):
        phi = phi.samples
    phi = np.asarray(phi, dtype=float)
    num = len(phi) if num_samples is None else num_samples
    t = 2.0 * np.pi * np.arange(num) / num
    if num != len(phi):
        phi = trig_resample(phi, 2.0 * np.pi, t)
    frame = _Frame(params, t)
    return PeriodicScalar(_gap(frame, phi, h))


def _multipliers(gap: np.ndarray) -> tuple[float, float]:
    t = 2.0 * np.pi * np.arange(len(gap)) / len(gap)
    w = 2.0 * np.pi / len(gap) / np.pi
    return (
        float((gap * np.cos(t)).sum() * w),
        float((gap * np.sin(t)).sum() * w),
    )


def fixed_point_solve(
    params: AnsatzParams,
    h: RadialCurvature,
    tol_fp: float = 1e-10,
    max_iter: int = 200,
    num_samples: int = 512,
):
    """Contract to the profile solving the projected curvature equation.

    The map is Q(phi) = Linv(L phi - G(phi)), started from phi = 0 and run
    until its defect sup|Q(phi) - phi| drops below ``tol_fp``.  Steps use
    secant (depth-1 Anderson) mixing of the last two map evaluations, which
    has the same fixed points as the plain iteration but roughly squares
    the convergence rate; the plain step is the first iterate.  Returns
    ``(phi, lambda1, lambda2, trace)`` with the kernel multipliers of the
    residual gap and the per-iteration defect sizes.  Raises
    ``NotContracting`` after five consecutive growing defects and
    ``MaxIterationsExceeded`` past the cap.
    """
    t = 2.0 * np.pi * np.arange(num_samples) / num_samples
    frame = _Frame(params, t)
    phi = np.zeros(num_samples)
    phi_prev = None
    res_prev = None
    trace = []
    growing = 0
    for _ in range(max_iter):
        residual = linf_invert_perp(linf_apply(phi) - _gap(frame, phi, h)) - phi
        delta = float(np.abs(residual).max())
        if trace and delta > trace[-1]:
            growing += 1
            if growing >= 5:
                raise NotContracting(
                    f"defect grew for 5 consecutive iterations (now {delta:.3e})"
                )
        else:
            growing = 0
        trace.append(delta)
        if delta <= tol_fp:
            gap = _gap(frame, phi, h)
            lam1, lam2 = _multipliers(gap)
            return PeriodicScalar(phi), lam1, lam2, tuple(trace)
        if res_prev is None:
            step = residual
        else:
            dres = residual - res_prev
            denom = float(np.dot(dres, dres))
            gamma = float(np.dot(residual, dres)) / denom if denom > 0 else 0.0
            gamma = min(max(gamma, -10.0), 10.0)
            step = residual - gamma * (phi - phi_prev + dres)
        phi_prev, res_prev = phi, residual
        phi = phi + step
    raise MaxIterationsExceeded(
        f"fixed-point defect not below {tol_fp:g} after {max_iter} iterations"
    )


def default_bracket(h: RadialCurvature) -> tuple[float, float]:
    """Radius-parameter bracket satisfying the root-existence inequalities
    2^((gamma+2)/2) r0 < |A~| gamma / 2 < r1, with 10% margins."""
    target = abs(h.tilde_amplitude) * h.gamma / 2.0
    r0 = target / 2.0 ** ((h.gamma + 2.0) / 2.0) * 0.9
    r1 = 2.0 * target * 1.1
    return r0, r1


def _radius(r: float, n: int, gamma: float) -> float:
    return (r * n) ** (1.0 / (gamma + 2.0))


def find_radius(
    n: int,
    h: RadialCurvature,
    r_bracket: tuple | None = None,
    tol_root: float = 1e-8,
    config: LSConfig | None = None,
) -> LSResult:
    """Bisect the radius parameter until the cosine multiplier vanishes.

    Each evaluation runs the full fixed point at R = (r n)^(1/(gamma+2)).
    The bracket must satisfy the root-existence inequalities and produce a
    sign change, else ``NoSignChange``.
    """
    config = config or LSConfig()
    mirror = h.tilde_amplitude < 0.0
    a_eff = abs(h.tilde_amplitude)
    r0, r1 = r_bracket if r_bracket is not None else default_bracket(h)
    if not (2.0 ** ((h.gamma + 2.0) / 2.0) * r0 < a_eff * h.gamma / 2.0 < r1):
        raise ValueError(
            f"bracket ({r0:g}, {r1:g}) violates the root-existence inequalities"
        )

    evals = []

    def lam1_at(r: float):
        params = AnsatzParams(n=n, R=_radius(r, n, h.gamma), mirror=mirror)
        phi, lam1, lam2, trace = fixed_point_solve(
            params, h, config.tol_fp, config.max_iter, config.num_samples
        )
        evals.append((r, lam1, len(trace)))
        return phi, lam1, lam2, trace

    def endpoint(r: float, other: float):
        # Below the asymptotic regime the contraction can fail near an
        # endpoint (the inner loops dive toward the origin); walk the
        # endpoint toward the other one until the solve succeeds.
        for _ in range(16):
            try:
                return r, lam1_at(r)
            except (NotContracting, MaxIterationsExceeded):
                r = r + 0.25 * (other - r)
        raise NotContracting(
            f"fixed point fails everywhere near the bracket end {r:g}"
        )

    r0, (phi_lo, f_lo, lam2_lo, trace_lo) = endpoint(r0, r1)
    r1, (phi_hi, f_hi, lam2_hi, trace_hi) = endpoint(r1, r0)
    if f_lo == 0.0:
        best = (r0, phi_lo, f_lo, lam2_lo, trace_lo)
    elif f_hi == 0.0:
        best = (r1, phi_hi, f_hi, lam2_hi, trace_hi)
    elif f_lo * f_hi > 0.0:
        raise NoSignChange(
            f"lambda1({r0:g}) = {f_lo:.3e} and lambda1({r1:g}) = {f_hi:.3e}"
        )
    else:
        best = None
        lo, hi = r0, r1
        for _ in range(config.max_bisect):
            mid = 0.5 * (lo + hi)
            phi_m, f_m, lam2_m, trace_m = lam1_at(mid)
            best = (mid, phi_m, f_m, lam2_m, trace_m)
            if abs(f_m) <= tol_root or hi - lo < 1e-15 * max(1.0, abs(hi)):
                break
            if f_m * f_lo < 0.0:
                hi = mid
            else:
                lo, f_lo = mid, f_m
        if best is None or abs(best[2]) > tol_root:
            raise MaxIterationsExceeded("bisection did not reach tol_root")

    r_n, phi, lam1, lam2, trace = best
    params = AnsatzParams(n=n, R=_radius(r_n, n, h.gamma), mirror=mirror)
    gap = curvature_gap(params, phi, h).samples
    t = 2.0 * np.pi * np.arange(len(gap)) / len(gap)
    residual = float(np.abs(gap - lam2 * np.sin(t)).max())
    converged = abs(lam1) <= tol_root and residual <= tol_root + 100.0 * config.tol_fp
    return LSResult(
        n=n,
        R=params.R,
        r=r_n,
        mirror=mirror,
        phi=phi,
        lambda1=lam1,
        lambda2=lam2,
        residual=residual,
        iterations=len(trace),
        bisections=len(evals),
        trace=tuple(evals),
        converged=converged,
    )


def verify_second_multiplier(result: LSResult, h: RadialCurvature):
    """|lambda2| alongside the rotational-invariance integral.

    The integral of (H - K)(w . w') over the period vanishes for *every*
    closed curve because the energy is rotation invariant; it is returned
    as an independent consistency residual.
    """
    params = AnsatzParams(n=result.n, R=result.R, mirror=result.mirror)
    phi = result.phi.samples
    num = len(phi)
    t = 2.0 * np.pi * np.arange(num) / num
    frame = _Frame(params, t)
    gap = _gap(frame, phi, h)
    dphi = _sderiv(phi, 1)
    w = frame.u + phi * frame.nu
    dw = frame.du + dphi * frame.nu + phi * frame.dnu
    radial_rate = (w.conjugate() * dw).real
    identity = float((-gap * radial_rate).sum() * 2.0 * np.pi / num)
    return abs(result.lambda2), identity


def build_immersed_loop(
    n: int, h: RadialCurvature, config: LSConfig | None = None
):
    """Assemble the full immersed loop over its whole period.

    Runs the radius search, then evaluates the perturbed ansatz on the
    unrescaled parameter over period 2 pi n.  Checks that the assembled
    curve is regular, that its curvature matches H to the combined solver
    tolerance, and that it stays outside the mollification radius of h.
    """
    config = config or LSConfig()
    result = find_radius(
        n, h, config.r_bracket, tol_root=config.tol_root, config=config
    )
    params = AnsatzParams(n=n, R=result.R, mirror=result.mirror)
    num_total = config.samples_per_loop * n
    if num_total % 2:
        num_total += 1
    t_full = 2.0 * np.pi * n * np.arange(num_total) / num_total
    frame = _Frame(params, t_full, rescaled=False)

    rho = params.rescale / n  # d(rescaled)/d(full parameter)
    s = rho * t_full
    phi = result.phi.samples
    big_phi = trig_resample(phi, 2.0 * np.pi, s)
    big_dphi = rho * trig_resample(_sderiv(phi, 1), 2.0 * np.pi, s)
    big_d2phi = rho**2 * trig_resample(_sderiv(phi, 2), 2.0 * np.pi, s)

    w = frame.u + big_phi * frame.nu
    dw = frame.du + big_dphi * frame.nu + big_phi * frame.dnu
    d2w = (
        frame.d2u
        + big_d2phi * frame.nu
        + 2.0 * big_dphi * frame.dnu
        + big_phi * frame.d2nu
    )
    speed = np.abs(dw)
    if speed.min() <= 1e-12 * speed.max():
        raise DegenerateSpeed("assembled loop is not immersed")
    min_dist = float(np.abs(w).min())
    if min_dist <= h.s0:
        raise ValueError(
            f"assembled loop reaches |p| = {min_dist:.3f} inside the "
            f"mollification radius {h.s0:g}; the result would depend on it"
        )
    kappa = (dw.conjugate() * d2w).imag / speed**3
    residual = float(np.abs(kappa - h(np.abs(w))).max())
    curve = ClosedCurve(
        period=2.0 * np.pi * n,
        samples=np.stack([w.real, w.imag], axis=1),
    )
    result = LSResult(
        n=result.n,
        R=result.R,
        r=result.r,
        mirror=result.mirror,
        phi=result.phi,
        lambda1=result.lambda1,
        lambda2=result.lambda2,
        residual=residual,
        iterations=result.iterations,
        bisections=result.bisections,
        trace=result.trace,
        converged=result.converged and residual <= 10.0 * config.tol_root,
    )
    return curve, result


def linearized_coeffs(params: AnsatzParams, num_samples: int = 512):
    """The three coefficient functions of the linearized curvature operator
    a phi'' + b phi' + c phi at the unperturbed ansatz."""
    t = 2.0 * np.pi * np.arange(num_samples) / num_samples
    fr = _Frame(params, t)
    s = fr.speed
    dot12 = (fr.du.conjugate() * fr.d2u).real
    cross12 = (fr.du.conjugate() * fr.d2u).imag  # i u' . u''
    a = 1.0 / s**2
    b = -dot12 / s**4
    c = (2.0 * dot12**2 - 2.0 * np.abs(fr.d2u) ** 2 * s**2 + 3.0 * cross12**2) / s**6
    return a, b, c
