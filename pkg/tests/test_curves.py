import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from prescurve import (
    ClosedCurve,
    DegenerateSpeed,
    PointOnCurve,
    curvature,
    derivative,
    dirichlet,
    is_simple,
    length,
    read_curve,
    reparametrize_constant_speed,
    signed_area,
    winding_number,
    write_curve,
)
from prescurve.curves import circle, curve_reverse, curve_translate, trig_resample

from conftest import random_loop


def unit_circle(n=256):
    return circle(1.0, n=n, period=1.0, orientation=1)


def figure_eight(n=256):
    t = np.arange(n) / n
    return ClosedCurve(1.0, np.stack([np.sin(4 * np.pi * t), np.sin(2 * np.pi * t)], axis=1))


class TestDerivative:
    def test_single_mode_exact(self):
        c = unit_circle()
        t = c.params
        exact = 2 * np.pi * np.stack([-np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)], axis=1)
        assert np.abs(derivative(c, 1) - exact).max() < 1e-12

    def test_constant_curve_zero(self):
        samples = np.tile([0.3, -0.7], (64, 1))
        c = ClosedCurve(1.0, samples)
        for order in (1, 2, 3):
            assert np.abs(derivative(c, order)).max() == 0.0

    def test_two_mode_second_derivative(self):
        t = np.arange(256) / 256
        c = ClosedCurve(1.0, np.stack([np.cos(4 * np.pi * t), np.sin(2 * np.pi * t)], axis=1))
        exact = np.stack(
            [-16 * np.pi**2 * np.cos(4 * np.pi * t), -4 * np.pi**2 * np.sin(2 * np.pi * t)],
            axis=1,
        )
        assert np.abs(derivative(c, 2) - exact).max() < 1e-9

    def test_order_validation(self):
        with pytest.raises(ValueError):
            derivative(unit_circle(), 4)


class TestLength:
    def test_unit_circle(self):
        assert length(unit_circle()) == pytest.approx(2 * np.pi, abs=1e-10)

    def test_constant_curve(self):
        c = ClosedCurve(1.0, np.tile([1.0, 2.0], (64, 1)))
        assert length(c) == pytest.approx(0.0, abs=1e-14)

    def test_ellipse_against_adaptive_quadrature(self):
        # oracle: adaptive quadrature of the ellipse speed
        t = np.arange(512) / 512
        c = ClosedCurve(1.0, np.stack([2 * np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1))
        oracle, _ = quad(
            lambda s: math.hypot(2 * math.sin(s), math.cos(s)), 0.0, 2 * math.pi, limit=200
        )
        assert length(c) == pytest.approx(oracle, abs=1e-8)


class TestSignedArea:
    def test_circle_convention_recorded(self):
        # direct quadrature of (1/2) u . i u' fixes the sign pairing once:
        # the counterclockwise circle (curvature +1) has area -pi r^2.
        for r in (1.0, 2.5):
            ccw = circle(r, n=256, orientation=1)
            assert signed_area(ccw) == pytest.approx(-math.pi * r**2, rel=1e-12)
            assert curvature(ccw).mean() == pytest.approx(1.0 / r, rel=1e-10)
        cw = circle(1.5, n=256, orientation=-1)
        assert signed_area(cw) == pytest.approx(math.pi * 1.5**2, rel=1e-12)

    def test_constant_curve(self):
        c = ClosedCurve(1.0, np.tile([1.0, 2.0], (64, 1)))
        assert signed_area(c) == pytest.approx(0.0, abs=1e-14)

    def test_figure_eight_cancels(self):
        assert signed_area(figure_eight()) == pytest.approx(0.0, abs=1e-12)

    @given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
    def test_translation_invariance(self, seed, cx, cy):
        rng = np.random.default_rng(seed)
        c = ClosedCurve(1.0, random_loop(rng))
        shifted = curve_translate(c, (cx, cy))
        assert abs(signed_area(shifted) - signed_area(c)) < 1e-10

    @given(st.integers(0, 2**32 - 1))
    def test_scaling_quadratic(self, seed):
        rng = np.random.default_rng(seed)
        c = ClosedCurve(1.0, random_loop(rng))
        doubled = ClosedCurve(1.0, 2.0 * c.samples)
        assert signed_area(doubled) == pytest.approx(4.0 * signed_area(c), rel=1e-12)


class TestCurvature:
    def test_ellipse_closed_form(self):
        # oracle: curvature a b / (a^2 sin^2 + b^2 cos^2)^(3/2)
        a, b = 2.0, 1.0
        t = np.arange(256) / 256
        c = ClosedCurve(1.0, np.stack([a * np.cos(2 * np.pi * t), b * np.sin(2 * np.pi * t)], axis=1))
        s = 2 * np.pi * t
        expected = a * b / (a**2 * np.sin(s) ** 2 + b**2 * np.cos(s) ** 2) ** 1.5
        assert np.abs(curvature(c) - expected).max() < 1e-9
        assert curvature(c)[0] == pytest.approx(2.0, rel=1e-10)

    def test_degenerate_raises(self):
        c = ClosedCurve(1.0, np.tile([1.0, 2.0], (64, 1)))
        with pytest.raises(DegenerateSpeed):
            curvature(c)

    def test_parametrization_invariance(self):
        # the same circle traversed over a different period has the same curvature
        fast = circle(1.0, n=256, period=0.5)
        slow = circle(1.0, n=256, period=3.0)
        assert np.abs(curvature(fast) - curvature(slow)).max() < 1e-8


class TestDirichlet:
    def test_constant_speed_circle(self):
        assert dirichlet(unit_circle()) == pytest.approx(2 * np.pi, rel=1e-12)

    def test_constant_curve(self):
        assert dirichlet(ClosedCurve(1.0, np.tile([0.0, 0.0], (64, 1)))) == 0.0

    def test_warped_exceeds_length_and_matches_quadrature(self):
        t = np.arange(512) / 512
        warp = t + 0.1 * np.sin(2 * np.pi * t) / (2 * np.pi)
        c = ClosedCurve(1.0, np.stack([np.cos(2 * np.pi * warp), np.sin(2 * np.pi * warp)], axis=1))
        oracle, _ = quad(
            lambda s: (2 * np.pi * (1 + 0.1 * np.cos(2 * np.pi * s))) ** 2, 0.0, 1.0, limit=200
        )
        assert dirichlet(c) == pytest.approx(math.sqrt(oracle), rel=1e-10)
        assert dirichlet(c) > length(c)

    @given(st.integers(0, 2**32 - 1))
    def test_dominates_length(self, seed):
        rng = np.random.default_rng(seed)
        c = ClosedCurve(1.0, random_loop(rng))
        assert dirichlet(c) >= length(c) * (1 - 1e-12)
        cs = reparametrize_constant_speed(c)
        assert dirichlet(cs) == pytest.approx(length(cs), rel=1e-8)


class TestWindingNumber:
    def test_circle_inside_outside(self):
        c = unit_circle()
        assert winding_number(c, (0.0, 0.0)) == 1
        assert winding_number(circle(1.0, n=256, orientation=-1), (0.0, 0.0)) == -1
        assert winding_number(c, (3.0, 0.0)) == 0

    def test_double_circle(self):
        t = np.arange(256) / 256
        c = ClosedCurve(1.0, np.stack([np.cos(4 * np.pi * t), np.sin(4 * np.pi * t)], axis=1))
        assert winding_number(c, (0.0, 0.0)) == 2

    def test_point_on_curve(self):
        with pytest.raises(PointOnCurve):
            winding_number(unit_circle(), (1.0, 0.0))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=100)
    def test_against_angle_accumulation(self, seed):
        # oracle: total turning of u - p by accumulated angle increments
        rng = np.random.default_rng(seed)
        c = ClosedCurve(1.0, random_loop(rng))
        p = rng.normal(scale=1.2, size=2)
        v = c.samples - p
        dist = np.hypot(v[:, 0], v[:, 1])
        if dist.min() < 1e-3:
            return
        ang = np.arctan2(v[:, 1], v[:, 0])
        dang = np.diff(np.concatenate([ang, ang[:1]]))
        dang = (dang + np.pi) % (2 * np.pi) - np.pi
        oracle = round(dang.sum() / (2 * np.pi))
        assert winding_number(c, p) == oracle


class TestReparametrize:
    def test_constant_speed_circle_unchanged(self):
        c = unit_circle()
        r = reparametrize_constant_speed(c)
        assert np.abs(r.samples - c.samples).max() < 1e-10

    def test_ellipse_speed_variation(self):
        t = np.arange(256) / 256
        c = ClosedCurve(1.0, np.stack([2 * np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1))
        r = reparametrize_constant_speed(c)
        du = derivative(r, 1)
        speed = np.hypot(du[:, 0], du[:, 1])
        assert (speed.max() - speed.min()) / speed.mean() < 1e-6
        assert length(r) == pytest.approx(length(c), rel=1e-8)
        assert signed_area(r) == pytest.approx(signed_area(c), rel=1e-8)

    def test_warped_circle_against_analytic_inverse(self):
        # oracle: the warp s -> s + eps sin(2 pi s) has arclength proportional
        # to the unwarped angle, so constant-speed sampling must land on the
        # uniform circle samples exactly.
        n = 256
        t = np.arange(n) / n
        eps = 0.08
        warp = t + eps * np.sin(2 * np.pi * t) / (2 * np.pi)
        c = ClosedCurve(1.0, np.stack([np.cos(2 * np.pi * warp), np.sin(2 * np.pi * warp)], axis=1))
        r = reparametrize_constant_speed(c)
        expected = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1)
        assert np.abs(r.samples - expected).max() < 1e-9

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateSpeed):
            reparametrize_constant_speed(ClosedCurve(1.0, np.tile([1.0, 0.0], (64, 1))))


class TestIsSimple:
    def test_circle_simple(self):
        ok, pairs = is_simple(unit_circle())
        assert ok and pairs == []

    def test_figure_eight_crossing(self):
        ok, pairs = is_simple(figure_eight())
        assert not ok
        assert len(pairs) == 1
        t1, t2 = pairs[0]
        assert t1 == pytest.approx(0.0, abs=0.02)
        assert t2 == pytest.approx(0.5, abs=0.02)

    def test_ansatz_loop_not_simple(self):
        # oracle: independent quadratic-loop segment-pair test
        from prescurve import AnsatzParams
        from prescurve.immersed import _Frame

        t = 2 * np.pi * 5 * np.arange(320) / 320
        fr = _Frame(AnsatzParams(n=5, R=2.0), t, rescaled=False)
        c = ClosedCurve(2 * np.pi * 5, np.stack([fr.u.real, fr.u.imag], axis=1))
        ok, pairs = is_simple(c)
        assert not ok and len(pairs) > 0

        def det(p, q):
            return p[0] * q[1] - p[1] * q[0]

        def brute_crossings(pts):
            n = len(pts)
            count = 0
            for i in range(n):
                a1, a2 = pts[i], pts[(i + 1) % n]
                for j in range(i + 2, n):
                    if i == 0 and j == n - 1:
                        continue
                    b1, b2 = pts[j], pts[(j + 1) % n]
                    d1 = det(a2 - a1, b1 - a1)
                    d2 = det(a2 - a1, b2 - a1)
                    d3 = det(b2 - b1, a1 - b1)
                    d4 = det(b2 - b1, a2 - b1)
                    if d1 * d2 < 0 and d3 * d4 < 0:
                        count += 1
            return count

        assert brute_crossings(c.samples) == len(pairs)


class TestIsoperimetricInequality:
    @given(st.integers(0, 2**32 - 1))
    def test_sharp_constant(self, seed):
        rng = np.random.default_rng(seed)
        c = ClosedCurve(1.0, random_loop(rng))
        s = math.sqrt(4 * math.pi)
        assert s * math.sqrt(abs(signed_area(c))) <= length(c) * (1 + 1e-6)

    def test_equality_for_circles(self):
        c = circle(1.7, n=256)
        s = math.sqrt(4 * math.pi)
        assert s * math.sqrt(abs(signed_area(c))) == pytest.approx(length(c), rel=1e-6)


class TestCurveIO:
    def test_roundtrip(self, tmp_path):
        c = ClosedCurve(2.0, random_loop(np.random.default_rng(0)))
        path = tmp_path / "curve.json"
        write_curve(c, path)
        back = read_curve(path)
        assert back.period == c.period
        assert np.array_equal(back.samples, c.samples)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"nope": 1}')
        with pytest.raises(ValueError):
            read_curve(path)


class TestValidation:
    def test_odd_samples_rejected(self):
        with pytest.raises(ValueError):
            ClosedCurve(1.0, np.zeros((17, 2)))

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError):
            ClosedCurve(1.0, np.zeros((8, 2)))

    def test_nonfinite_rejected(self):
        bad = np.zeros((16, 2))
        bad[3, 1] = np.nan
        with pytest.raises(ValueError):
            ClosedCurve(1.0, bad)

    def test_reverse_flips_area(self):
        c = circle(1.0, n=64)
        assert signed_area(curve_reverse(c)) == pytest.approx(-signed_area(c), rel=1e-12)


def test_trig_resample_reproduces_samples():
    rng = np.random.default_rng(5)
    samples = random_loop(rng, n=128)
    c = ClosedCurve(1.0, samples)
    vals = trig_resample(samples, 1.0, c.params)
    assert np.abs(vals - samples).max() < 1e-11
