import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pointsource.errors import DomainViolation, MassImbalance, ZeroProjection
from pointsource.geometry import random_configuration, validate_configuration
from pointsource.real_basis import RealExpansionSpec3, multipole_r2, psi_r2
from pointsource.reduction import (
    dipole_line_integral,
    line_integral_pm,
    line_integral_pm_quad,
    mass_line_integral,
    probe_points,
    reduce_dipole_r3,
    reduce_pm_r3,
)


def mp_pm(a, b, L):
    with mpmath.workdps(30):
        f = lambda s: 1 / mpmath.sqrt(a * a + s * s) - 1 / mpmath.sqrt(b * b + s * s)  # noqa: E731
        return float(2 * mpmath.quad(f, [0, 1, 10, 100, 1000, L]))


class TestPmIntegral:
    def test_quadrature_oracle(self):
        assert line_integral_pm(1.5, 2.0, 1e3) == pytest.approx(mp_pm(1.5, 2.0, 1e3), abs=1e-9)
        assert line_integral_pm_quad(1.5, 2.0, 1e3) == pytest.approx(mp_pm(1.5, 2.0, 1e3), abs=1e-9)

    @given(st.floats(0.5, 3), st.floats(0.5, 3))
    def test_limit(self, a, b):
        assert line_integral_pm(a, b, 1e4) == pytest.approx(2 * math.log(b / a), abs=1e-6)

    @given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(1, 1e6))
    def test_antisymmetric(self, a, b, L):
        assert line_integral_pm(a, b, L) == pytest.approx(-line_integral_pm(b, a, L), abs=1e-14)

    def test_equal_distances(self):
        assert line_integral_pm(1.3, 1.3, 50.0) == 0.0

    def test_vectorized(self):
        v = line_integral_pm(np.array([1.0, 2.0]), 1.5, 10.0)
        assert v.shape == (2,)

    @pytest.mark.parametrize("a, b, L", [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, math.inf)])
    def test_domain(self, a, b, L):
        with pytest.raises(DomainViolation):
            line_integral_pm(a, b, L)

    def test_segment_against_mp(self):
        # one term with height h and origin counter-term
        X2 = np.array([[1.7, -0.4]])
        P = np.array([[0.2, 0.3, 0.45]])
        got = mass_line_integral(X2, P, [1.0], 200.0)[0, 0]
        a = float(np.linalg.norm(X2[0] - P[0, :2]))
        b = float(np.linalg.norm(X2[0]))
        with mpmath.workdps(30):
            ref = mpmath.quad(lambda s: 1 / mpmath.sqrt(a**2 + (s - 0.45) ** 2) - 1 / mpmath.sqrt(b**2 + s**2),
                              [-200, -10, 0, 10, 200])
        assert got == pytest.approx(float(ref), abs=1e-11)


def spec3(points, masses=None, dipoles=None):
    return RealExpansionSpec3(validate_configuration(points), masses, dipoles)


class TestMassReduction:
    def test_symmetric_pair(self):
        spec = spec3([[0.3, 0.0, 0.0], [-0.3, 0.0, 0.0]], masses=[1.0, -1.0])
        spec2, rep = reduce_pm_r3(spec)
        assert rep.defect < 1e-6
        assert rep.richardson < 1e-12
        np.testing.assert_allclose(spec2.masses, [1.0, -1.0])

    def test_imbalance(self):
        with pytest.raises(MassImbalance):
            reduce_pm_r3(spec3([[0.3, 0.0, 0.1]], masses=[1.0]))

    @settings(max_examples=20)
    @given(st.integers(0, 2**31 - 1), st.integers(2, 6))
    def test_random_balanced(self, seed, n):
        rng = np.random.default_rng(seed)
        cfg = random_configuration(rng, n, dim=3)
        m = rng.normal(size=n)
        m -= m.mean()
        _, rep = reduce_pm_r3(RealExpansionSpec3(cfg, m))
        assert rep.defect < 1e-6

    def test_report_json(self):
        spec = spec3([[0.3, 0.0, 0.2], [-0.3, 0.1, 0.0]], masses=[2.0, -2.0])
        _, rep = reduce_pm_r3(spec)
        assert len(rep.per_term) == 2 and '"defect"' in rep.to_json()


class TestDipoleReduction:
    def test_axial_dipole_vanishes(self):
        X2 = probe_points()
        for h in (0.0, 0.3, -0.45):
            I = dipole_line_integral(X2, np.array([[0.2, -0.1, h]]), np.array([[0.0, 0.0, 1.0]]), 1e4)
            assert np.max(np.abs(I.sum(axis=0))) <= 1e-8
            # closed form of the truncated axial part: D_z (1/r(L-h) - 1/r(-L-h)) ~ 2 h D_z / L^2
            assert np.max(np.abs(I[1])) == pytest.approx(2 * abs(h) / 1e8, rel=1e-3, abs=1e-14)

    def test_x_dipole_gradient(self):
        X2 = probe_points(8, 2.0)
        I = dipole_line_integral(X2, np.array([[0.1, 0.05, 0.2]]), np.array([[1.0, 0.0, 0.0]]), 1e4)
        A1, _ = multipole_r2(X2, np.array([0.1, 0.05]), 1)
        np.testing.assert_allclose(I[0, :, 0], 2 * A1, atol=1e-6)

    def test_gradient_by_finite_difference(self):
        X = np.array([1.6, 1.1])
        Xk = np.array([0.2, -0.3])
        h = 1e-5
        fd = (psi_r2(X + [h, 0], Xk) - psi_r2(X - [h, 0], Xk)) / (2 * h) - X[0] / X.dot(X)
        I = dipole_line_integral(X[None], np.array([[*Xk, 0.0]]), np.array([[1.0, 0, 0]]), 1e4)
        assert I[0, 0, 0] == pytest.approx(2 * fd, abs=1e-6)

    def test_full_spec(self):
        rng = np.random.default_rng(8)
        cfg = random_configuration(rng, 4, dim=3)
        _, rep = reduce_dipole_r3(RealExpansionSpec3(cfg, None, rng.normal(size=(4, 3))))
        assert rep.defect < 1e-6
        assert rep.axial_richardson <= 1e-8

    def test_vertical_dipole_picks_other_axis(self):
        spec = spec3([[0.3, 0.1, 0.0], [-0.2, 0.4, 0.1]], dipoles=[[0, 0, 1.0], [0, 0, 0.5]])
        spec2, rep = reduce_dipole_r3(spec)
        assert abs(rep.axis[2]) < 1.0
        assert np.all(np.linalg.norm(spec2.dipoles, axis=1) > 0)

    def test_forced_axis_zero_projection(self):
        spec = spec3([[0.3, 0.1, 0.0]], dipoles=[[0, 0, 1.0]])
        with pytest.raises(ZeroProjection):
            reduce_dipole_r3(spec, axis=[0, 0, 1])
