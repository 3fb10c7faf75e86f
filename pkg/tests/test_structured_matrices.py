import numpy as np
import pytest
from hypothesis import given, strategies as st

import _oracles
from pointsource import structured_matrices as sm
from pointsource.complex_basis import ComplexExpansionSpec, series_coefficients
from pointsource.errors import BadOrder, DuplicateNodes, IllConditioned, NonFinite, SingularBlock, ZeroNode
from pointsource.geometry import random_configuration, validate_configuration


def nodes_for(seed, n):
    return random_configuration(np.random.default_rng(seed), n).as_complex()


seeds = st.integers(0, 2**31 - 1)


class TestVandermonde:
    def test_small(self):
        G = sm.vandermonde([0.2, 0.5])
        np.testing.assert_array_equal(G.entries, [[1, 1], [0.2, 0.5]])
        assert sm.vandermonde_det([0.2, 0.5]) == pytest.approx(0.3)

    def test_five_nodes_product(self, rng):
        z = nodes_for(5, 5)
        ref = _oracles.det_mp(z)
        assert abs(sm.vandermonde_det_product(z) - ref) <= 1e-10 * abs(ref)
        assert abs(sm.vandermonde_det(z) - ref) <= 1e-10 * abs(ref)
        assert abs(sm.vandermonde_det(z, "extended") - ref) <= 1e-13 * abs(ref)

    def test_rejects(self):
        with pytest.raises(DuplicateNodes):
            sm.vandermonde([0.5, 0.5])
        with pytest.raises(NonFinite):
            sm.vandermonde([np.nan, 0.5])
        with pytest.raises(ZeroNode):
            sm.diag_X([0.0, 0.5])

    def test_read_only(self):
        G = sm.vandermonde([0.2, 0.5])
        with pytest.raises(ValueError):
            G.entries[0, 0] = 2

    def test_diag_n(self):
        np.testing.assert_array_equal(sm.diag_N(3), np.diag([1.0, 2.0, 3.0]))


class TestMomentBlocks:
    def test_log_block_rows(self):
        Gp = sm.log_moment_matrix([0.2, 0.5]).entries
        np.testing.assert_allclose(Gp[1], [0.02, 0.125])

    def test_pole1_is_g(self):
        np.testing.assert_array_equal(sm.pole_moment_block([0.2, 0.5j], 1).entries,
                                      sm.vandermonde([0.2, 0.5j]).entries)

    def test_pole2_single_node(self):
        # b_3 = S_{2,1} z nu = 2 * 0.5 * nu
        B = sm.pole_moment_block([0.5], 2)
        assert B.row_offset == 3
        np.testing.assert_allclose(B.entries, [[1.0]])

    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_block_rows_match_series(self, m, rng):
        z = nodes_for(rng.integers(1 << 30), 4)
        nu = rng.normal(size=4) + 1j * rng.normal(size=4)
        spec = ComplexExpansionSpec(validate_configuration(z), poles={m: nu})
        block = sm.pole_moment_block(z, m)
        b = series_coefficients(spec, block.row_offset + 3).b
        np.testing.assert_allclose(block.entries @ nu, b[block.row_offset - 1:], rtol=1e-12, atol=1e-14)

    def test_bad_order(self):
        with pytest.raises(BadOrder):
            sm.pole_moment_block([0.5], 0)

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    @given(seed=seeds, n=st.integers(1, 8))
    def test_kernel_trivial(self, m, seed, n):
        block = sm.pole_moment_block(nodes_for(seed, n), m).entries
        nu = np.random.default_rng(seed).normal(size=n) + 0j
        assert np.linalg.norm(block @ nu) > 0
        assert not sm.is_numerically_singular(block)


class TestMixed:
    def test_pole12_single_node(self):
        M = sm.mixed_block_system([0.5], ("pole1", "pole2"))
        np.testing.assert_allclose(M.entries, [[0.5, 1.0], [0.25, 1.0]])

    def test_log_pole_single_node(self):
        M = sm.log_pole_block([0.5])
        # j * (z^{j-1}/j, z^{j-1}) at j = 2, 3
        np.testing.assert_allclose(M.entries, [[0.5, 1.0], [0.25, 0.75]])

    def test_kind_order_fixed(self):
        M = sm.mixed_block_system([0.3, 0.6j], ["pole2", "log"])
        assert [k for k, _ in M.kind_layout] == ["log", "pole2"]
        with pytest.raises(ValueError):
            sm.mixed_block_system([0.3], ["dipole"])

    def test_matches_series(self, rng):
        z = nodes_for(7, 3)
        cfg = random_configuration(np.random.default_rng(7), 3)
        rho, mu, nu = (rng.normal(size=3) + 1j * rng.normal(size=3) for _ in range(3))
        spec = ComplexExpansionSpec(cfg, rho, {1: mu, 2: nu})
        M = sm.mixed_block_system(z, ("log", "pole1", "pole2"), rows=12)
        b = series_coefficients(spec, 13).b
        x = np.concatenate([z * rho, mu, nu])  # log columns carry rho' = z rho
        np.testing.assert_allclose(M.entries @ x, b[1:13], rtol=1e-12, atol=1e-14)


class TestElimination:
    @given(seed=seeds, n=st.integers(1, 8))
    def test_similarity(self, seed, n):
        z = nodes_for(seed, n)
        _, reduced = sm.eliminate_first_block(sm.mixed_block_system(z, ("pole1", "pole2")))
        G = sm.vandermonde(z).entries
        C = sm.c_matrix(z).C
        lhs = G @ np.linalg.solve(G.T, reduced.T).T
        assert np.linalg.norm(lhs - C) <= 1e-10 * np.linalg.norm(C)

    def test_two_nodes_against_literal(self):
        z = np.array([0.3, 0.5j])
        _, reduced = sm.eliminate_first_block(sm.mixed_block_system(z, ("pole1", "pole2")))
        np.testing.assert_allclose(reduced, _oracles.bracket_literal(z), rtol=1e-12, atol=1e-12)

    def test_kernel_agreement(self, rng):
        z = nodes_for(3, 4)
        S = sm.mixed_block_system(z, ("pole1", "pole2")).entries
        mu_of_nu, reduced = sm.eliminate_first_block(S)
        for _ in range(5):
            nu = rng.normal(size=4) + 1j * rng.normal(size=4)
            full = S @ np.concatenate([mu_of_nu @ nu, nu])
            # top rows vanish by construction; the bottom residual is the reduced map
            np.testing.assert_allclose(full[:4], 0, atol=1e-12)
            lhs = np.linalg.norm(full[4:])
            assert (lhs > 1e-12) == (np.linalg.norm(reduced @ nu) > 1e-12)

    @given(seed=seeds, n=st.integers(1, 8))
    def test_log_pole_matches_bracket(self, seed, n):
        z = nodes_for(seed, n)
        _, red_log = sm.eliminate_log_block(sm.log_pole_block(z))
        _, red_pole = sm.eliminate_first_block(sm.mixed_block_system(z, ("pole1", "pole2")))
        assert np.linalg.norm(red_log - red_pole) <= 1e-10 * np.linalg.norm(red_pole)

    def test_singular_block(self):
        S = np.zeros((4, 4), dtype=complex)
        S[0] = [0.5, 0.6, 1, 1]
        with pytest.raises(SingularBlock):
            sm.eliminate_first_block(S)

    def test_non_square(self):
        with pytest.raises(ValueError):
            sm.eliminate_first_block(np.ones((3, 4)))


class TestCMatrix:
    def test_two_nodes(self):
        b = sm.c_matrix([0.3, 0.5j])
        assert b.sigma_min > 1e-10 * b.sigma_max

    @pytest.mark.parametrize("precision", ["double", "extended"])
    @given(seed=seeds, n=st.integers(1, 5))
    def test_against_literal(self, precision, seed, n):
        z = nodes_for(seed, n)
        ref = _oracles.c_literal(z)
        C = sm.c_matrix(z, precision=precision).C
        assert np.linalg.norm(C - ref) <= 1e-9 * np.linalg.norm(ref)

    def test_sigma_min_against_mp(self):
        z = nodes_for(11, 4)
        ref = _oracles.min_singular_mp(_oracles.c_literal(z))
        for prec in ("double", "extended"):
            assert sm.c_matrix(z, precision=prec).sigma_min == pytest.approx(ref, rel=1e-8)

    def test_single_node_identity(self):
        b = sm.c_matrix([0.37 - 0.2j])
        np.testing.assert_allclose(b.C, [[1.0]], atol=1e-15)
        assert b.sigma_min == 1.0

    def test_a_plus_b(self):
        b = sm.c_matrix(nodes_for(2, 3))
        np.testing.assert_allclose(b.A + b.B, b.C)
        np.testing.assert_allclose(b.U, np.linalg.solve(b.G.T, (b.G @ np.diag(b.nodes**3)).T).T)

    @given(seed=seeds, n=st.integers(1, 6))
    def test_b_spectrum(self, seed, n):
        ev = sm.b_spectrum(nodes_for(seed, n))
        np.testing.assert_allclose(ev, np.arange(1, n + 1), atol=1e-8)

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_c_m_literal(self, m):
        z = nodes_for(17 + m, 3)
        ref = _oracles.bracket_literal(z, m)
        got = sm.c_m_matrix(z, m).C
        assert np.linalg.norm(got - ref) <= 1e-9 * np.linalg.norm(ref)

    def test_c1_similar_to_c(self):
        z = nodes_for(23, 4)
        G = sm.vandermonde(z).entries
        C1 = sm.c_m_matrix(z, 1, precision="double").C
        C = sm.c_matrix(z, precision="double").C
        assert np.linalg.norm(G @ C1 @ np.linalg.inv(G) - C) <= 1e-10 * np.linalg.norm(C)

    def test_c_m_sweep(self):
        for m in range(1, 5):
            for seed in range(100):
                n = 1 + seed % 6
                b = sm.c_m_matrix(nodes_for(seed, n), m)
                assert b.sigma_min > 0, (m, seed)

    def test_double_guard(self):
        z = np.array([0.5, 0.5 + 1e-7, 0.5 + 2e-7, 0.5 + 3e-7])
        with pytest.raises(IllConditioned):
            sm.c_matrix(z, precision="double")
        b = sm.c_matrix(z)
        assert b.flagged and b.precision == "extended" and b.certified

    def test_auto_amplification(self):
        z = np.array([0.05, 0.9, -0.9j, 0.5 + 0.5j, -0.7])
        assert sm.amplification(z) > sm.AMPLIFICATION_MAX
        assert sm.c_matrix(z).precision == "extended"

    def test_json(self):
        b = sm.c_matrix([0.3, 0.5j])
        assert '"sigma_min"' in b.to_json()


class TestSpectra:
    def test_rank_one(self):
        assert sm.min_singular_value([[1, 1], [1, 1]]) <= 1e-14
        assert sm.is_numerically_singular([[1, 1], [1, 1]])
        assert sm.condition_number(np.eye(3)) == 1.0

    def test_non_finite(self):
        with pytest.raises(NonFinite):
            sm.singular_values([[np.inf, 0], [0, 1]])


@given(st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=12), st.integers(1, 4))
def test_csv_round_trip(vals, cols):
    A = np.resize(np.array(vals, dtype=complex), (len(vals), cols))
    np.testing.assert_array_equal(sm.from_csv(sm.to_csv(A)), A)
