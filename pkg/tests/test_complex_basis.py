import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from pointsource.complex_basis import (
    ComplexExpansionSpec,
    binomial_pole_coefficient,
    dpsi_dz,
    eval_expansion,
    pole,
    psi,
    series_coefficients,
    tail_bound,
    truncation_order,
    verify_branch_free,
)
from pointsource.errors import BadOrder, DomainViolation
from pointsource.geometry import random_configuration, validate_configuration

mpmath.mp.dps = 40

inside = st.builds(
    lambda r, t: r * complex(math.cos(t), math.sin(t)),
    st.floats(0.0, 0.95), st.floats(0, 2 * math.pi),
)
outside = st.builds(
    lambda r, t: r * complex(math.cos(t), math.sin(t)),
    st.floats(1.0, 50.0), st.floats(0, 2 * math.pi),
)


def mp_psi(z, zk):
    return complex(mpmath.log(mpmath.mpc(z) / (mpmath.mpc(z) - mpmath.mpc(zk))))


class TestPsi:
    def test_real_value(self):
        assert psi(2.0, 0.5) == pytest.approx(math.log(4 / 3), rel=1e-15)
        assert psi(2.0, 0.5) == pytest.approx(0.28768207, abs=1e-8)

    @given(outside, inside)
    def test_matches_mp_oracle(self, z, zk):
        ref = mp_psi(z, zk)
        got = complex(psi(z, zk))
        assert abs(got - ref) <= 1e-14 * max(1.0, abs(ref)) + 1e-300

    def test_small_ratio_accuracy(self):
        # log1p path keeps relative accuracy where log(z/(z-zk)) would cancel
        z, zk = 1e6, 1e-3
        assert psi(z, zk).real == pytest.approx(-math.log1p(-zk / z), rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainViolation):
            psi(0.5, 0.1)
        with pytest.raises(DomainViolation):
            psi(2.0, 1.0)

    def test_derivative_fd(self):
        z, zk, h = 1.7 + 0.4j, 0.3 - 0.5j, 1e-6
        fd = (psi(z + h, zk) - psi(z - h, zk)) / (2 * h)
        assert abs(fd - dpsi_dz(z, zk)) < 1e-8

    @given(st.floats(1.0, 20.0), inside)
    def test_branch_free_bound(self, radius, zk):
        assert verify_branch_free(zk, radius, samples=512) < math.pi / 2


class TestPole:
    def test_value(self):
        assert pole(2.0, 0.5, 2) == pytest.approx(1 / 2.25, rel=1e-15)

    @pytest.mark.parametrize("m", [0, -1, 1.5])
    def test_bad_order(self, m):
        with pytest.raises(BadOrder):
            pole(2.0, 0.5, m)

    def test_monotone_decay(self):
        z, zk = 1.0 + 0.2j, 0.5
        vals = [abs(pole(z, zk, m)) for m in range(1, 30)]
        for m, v in enumerate(vals, start=1):
            assert v <= (abs(z) - abs(zk)) ** -m * (1 + 1e-12)


class TestBinomial:
    @pytest.mark.parametrize("m", [1, 2, 5, 9])
    def test_s_m0(self, m):
        assert binomial_pole_coefficient(m, 0) == 1

    def test_s2n(self):
        for n in range(11):
            assert binomial_pole_coefficient(2, n) == n + 1

    @given(st.integers(1, 12), st.integers(0, 40))
    def test_factorial_oracle(self, m, n):
        ref = math.factorial(m + n - 1) / (math.factorial(n) * math.factorial(m - 1))
        assert binomial_pole_coefficient(m, n) == pytest.approx(ref, rel=1e-13)

    def test_saturates(self):
        assert binomial_pole_coefficient(400, 400) > 1e200
        assert math.isinf(binomial_pole_coefficient(1000, 1000))

    def test_pole_series_identity(self):
        # z^m/(z-zk)^m = sum S_{m,n} (zk/z)^n
        z, zk, m = 2.0 + 1j, 0.4 - 0.3j, 4
        s = sum(binomial_pole_coefficient(m, n) * (zk / z) ** n for n in range(120))
        assert abs(s - z**m * pole(z, zk, m)) < 1e-13


def one_source(**kw):
    return ComplexExpansionSpec(validate_configuration([[0.5, 0.0]]), **kw)


class TestSeries:
    def test_single_pole(self):
        spec = one_source(poles={1: np.array([1.0])})
        assert eval_expansion(spec, 2.0) == pytest.approx(2 / 3)
        b = series_coefficients(spec, 10).b
        np.testing.assert_allclose(b, 0.5 ** np.arange(10))

    def test_single_log(self):
        spec = one_source(log_strengths=np.array([1.0]))
        b = series_coefficients(spec, 12).b
        j = np.arange(1, 13)
        np.testing.assert_allclose(b, 0.5**j / j)

    def test_residue_sum(self):
        spec = ComplexExpansionSpec(
            validate_configuration([[0.5, 0.0], [0.0, -0.3]]),
            log_strengths=np.array([1.0, 2.0j]),
            poles={1: np.array([0.25, -1.0])},
        )
        # b_1 = sum rho_k z_k + sum mu_k
        ref = 0.5 + 2j * (-0.3j) + 0.25 - 1.0
        assert series_coefficients(spec, 4).residue_sum == pytest.approx(ref)

    def test_empty_spec_rejected(self):
        with pytest.raises(ValueError):
            one_source()

    @given(st.integers(0, 2**31 - 1), st.integers(1, 6))
    def test_truncated_series_within_tail_bound(self, seed, n):
        rng = np.random.default_rng(seed)
        spec = random_complex_spec(rng, n)
        n_max = 30
        z = 2.0 * np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
        err = np.abs(eval_expansion(spec, z) - series_coefficients(spec, n_max).evaluate(z))
        assert np.all(err <= tail_bound(spec, n_max, 2.0) * (1 + 1e-9) + 1e-14)

    def test_truncation_order_monotone(self, rng):
        spec = random_complex_spec(rng, 4)
        assert truncation_order(spec, 2.0, 1e-8) <= truncation_order(spec, 2.0, 1e-14)

    def test_dict_round_trip(self, rng):
        spec = random_complex_spec(rng, 3)
        back = ComplexExpansionSpec.from_dict(spec.to_dict())
        z = 1.5 + 0.5j
        assert eval_expansion(back, z) == eval_expansion(spec, z)


def random_complex_spec(rng, n):
    cfg = random_configuration(rng, n, r_max=0.9)

    def c():
        return rng.normal(size=n) + 1j * rng.normal(size=n)

    poles = {m: c() for m in (1, 2, 3) if rng.random() < 0.7}
    return ComplexExpansionSpec(cfg, c() if (rng.random() < 0.7 or not poles) else None, poles)
