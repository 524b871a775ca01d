import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minstab.geometry import (
    Axis,
    FundamentalData,
    GeometryError,
    PinchHypothesisError,
    RankDeficiencyError,
    custom_chart,
    eigen_pinch_lemma,
    ellipsoid_chart,
    ellipsoid_extremes,
    fundamental_data,
    fundamental_data_batch,
    pinch_check,
    pinch_epsilon2,
    sample_grid,
    sectional_range,
    sphere_chart,
)
from minstab.sampling import random_pinched_lambda

from oracles import ellipsoid_principal_curvatures, ellipsoid_sectional_range, orthogonal_gauss_curvature

TORUS = custom_chart(
    ["(2 + cos(v))*cos(u)", "(2 + cos(v))*sin(u)", "sin(v)"],
    ["u", "v"],
    [(0, 2 * np.pi, True), (0, 2 * np.pi, True)],
)


class TestFundamentalData:
    def test_unit_sphere_is_umbilic(self):
        fd = fundamental_data(sphere_chart(3), [0.7, 1.2, 2.0])
        assert np.allclose(fd.lam, 1.0, atol=1e-13)
        assert np.allclose(fd.nu, -fd.x, atol=1e-13)

    def test_paraboloid_vertex(self):
        chart = custom_chart(["u", "v", "(u^2 + v^2)/2"], ["u", "v"], [(-1, 1), (-1, 1)])
        fd = fundamental_data(chart, [0.0, 0.0])
        assert np.allclose(fd.S, np.eye(2), atol=1e-14)
        assert np.allclose(fd.nu, [0, 0, 1])

    def test_normal_orientation_makes_trace_nonnegative(self):
        for u in sample_grid(TORUS.domain, 6):
            assert np.trace(fundamental_data(TORUS, u).S) >= 0

    def test_principal_directions_are_orthonormal_and_tangent(self):
        fd = fundamental_data(ellipsoid_chart([0.8, 1.0, 1.3, 1.7]), [0.4, 1.1, 2.5])
        D = fd.principal_dirs
        assert np.allclose(D.T @ D, np.eye(3), atol=1e-13)
        assert np.allclose(fd.nu @ D, 0, atol=1e-13)
        assert np.allclose(D.T @ fd.shape_matrix @ D, np.diag(fd.lam), atol=1e-13)

    def test_ellipsoid_matches_implicit_curvatures(self):
        a = np.array([0.8, 1.0, 1.3, 1.7])
        chart = ellipsoid_chart(a)
        rng = np.random.default_rng(0)
        for u in rng.uniform([0.2, 0.2, 0.0], [2.9, 2.9, 6.2], size=(50, 3)):
            fd = fundamental_data(chart, u)
            assert np.allclose(fd.lam, ellipsoid_principal_curvatures(a, fd.x), atol=1e-11)

    def test_ellipsoid_vertex(self):
        fd = fundamental_data(ellipsoid_chart([0.9, 1, 1, 1]), [np.pi / 2] * 3)
        assert np.allclose(fd.x, [0.9, 0, 0, 0], atol=1e-15)
        assert np.allclose(fd.lam, 0.9, atol=1e-13)

    def test_gauss_equation_against_intrinsic_curvature(self):
        # torus of revolution has orthogonal coordinates, E = (2 + cos v)^2, G = 1
        def metric(u, v):
            return (2 + np.cos(v)) ** 2, 1.0

        for u, v in [(0.3, 0.4), (1.0, 2.0), (4.0, 3.5), (2.2, 5.9)]:
            fd = fundamental_data(TORUS, [u, v])
            K = orthogonal_gauss_curvature(metric, u, v)
            assert fd.lam[0] * fd.lam[1] == pytest.approx(K, abs=1e-6)

    def test_reparametrisation_invariance(self):
        base = sphere_chart(2)
        s = custom_chart(
            ["sin(w^2)*sin(t + w)", "sin(w^2)*cos(t + w)", "cos(w^2)"],
            ["w", "t"],
            [(0.1, 1.7), (0, 2 * np.pi, True)],
        )
        fd1 = fundamental_data(base, [1.3**2, 0.5 + 1.3])
        fd2 = fundamental_data(s, [1.3, 0.5])
        assert np.allclose(fd1.x, fd2.x, atol=1e-14)
        assert np.allclose(fd1.lam, fd2.lam, atol=1e-12)
        assert np.allclose(fd1.shape_matrix, fd2.shape_matrix, atol=1e-12)

    @pytest.mark.parametrize("t", [0.5, 2.0, 3.7])
    def test_scaling_divides_curvature(self, t):
        chart = ellipsoid_chart([0.8, 1.0, 1.3, 1.7])
        u = [0.9, 1.4, 0.3]
        assert np.allclose(fundamental_data(chart.scaled(t), u).lam, fundamental_data(chart, u).lam / t)

    def test_sphere_radius(self):
        fd = fundamental_data(sphere_chart(4, radius=2.0), [0.5, 1.0, 1.5, 2.0])
        assert np.allclose(fd.lam, 0.5)

    def test_rank_deficient_point(self):
        with pytest.raises(RankDeficiencyError) as info:
            fundamental_data(sphere_chart(3), [0.0, 1.0, 1.0])
        assert info.value.point.tolist() == [0.0, 1.0, 1.0]

    def test_codimension_check(self):
        with pytest.raises(GeometryError):
            custom_chart(["u", "v"], ["u", "v"], [(0, 1), (0, 1)])

    def test_batch_matches_single(self):
        chart = ellipsoid_chart([0.8, 1.0, 1.3, 1.7])
        U = sample_grid(chart.domain, 3)
        for fd, u in zip(fundamental_data_batch(chart, U), U):
            assert np.allclose(fd.lam, fundamental_data(chart, u).lam, atol=1e-14)

    def test_curvature_form_is_sectional_for_principal_planes(self):
        lam = np.array([0.6, 0.8, 1.1])
        fd = FundamentalData.from_principal([0, 0, 0, 1.0], np.eye(4)[:, :3], lam)
        for r in range(3):
            for s in range(r + 1, 3):
                assert fd.sectional(np.eye(4)[r], np.eye(4)[s] * 2.5) == pytest.approx(lam[r] * lam[s])


class TestPinching:
    def test_thresholds(self):
        assert pinch_epsilon2(3) == pytest.approx(1 / np.sqrt(2))
        assert pinch_epsilon2(5) == pytest.approx(0.5)
        assert pinch_epsilon2(3, "corollary", m=5) == pytest.approx(1 / np.sqrt(6))
        with pytest.raises(GeometryError):
            pinch_epsilon2(2)

    def test_unit_sphere_passes(self):
        rep = pinch_check(sphere_chart(3), grid=8)
        assert rep.passed
        assert rep.K_min == pytest.approx(1.0) and rep.K_max == pytest.approx(1.0)
        assert rep.worst_point is None

    def test_radius_two_sphere_fails_lower_bound(self):
        rep = pinch_check(sphere_chart(3, radius=2.0), grid=8)
        assert not rep.pass_lower and rep.pass_upper
        assert rep.K_min == pytest.approx(0.25)
        assert rep.worst_point is not None

    def test_ellipsoid_curvature_extremes(self):
        a = [0.5, 1.0, 1.0, 1.0]
        rep = pinch_check(ellipsoid_chart(a), grid=16)
        kmin, kmax = ellipsoid_sectional_range(a, samples=4000)
        assert not rep.pass_upper
        # at (0, 1, 0, 0) the curvatures are 4, 1, 1
        assert rep.K_max == pytest.approx(4.0, rel=1e-3)
        assert rep.K_max == pytest.approx(kmax, rel=0.01)
        # grid sampling can only miss extremes, never overshoot them
        assert 0.25 - 1e-12 <= rep.K_min <= 0.25 * 1.05
        assert kmin == pytest.approx(0.25, rel=0.01)

    def test_ellipsoid_extremes_bound_sampled_curvatures(self):
        a = [0.7, 0.9, 1.0, 1.2]
        lo, hi = ellipsoid_extremes(a)
        rng = np.random.default_rng(1)
        chart = ellipsoid_chart(a)
        for u in rng.uniform([0.1, 0.1, 0.0], [3.0, 3.0, 6.2], size=(200, 3)):
            lam = fundamental_data(chart, u).lam
            assert lo - 1e-12 <= lam.min() and lam.max() <= hi + 1e-12

    def test_report_dict_has_notes(self):
        d = pinch_check(sphere_chart(3), grid=8).to_dict()
        assert d["passed"] is True
        assert any("completeness" in n for n in d["notes"])

    def test_sectional_range(self):
        assert sectional_range([0.5, 1.0, 2.0]) == (0.5, 2.0)


class TestEigenPinch:
    def test_raises_on_bad_pair(self):
        with pytest.raises(PinchHypothesisError) as info:
            eigen_pinch_lemma([0.2, 1.0, 1.0], 0.8)
        assert info.value.pair == (0, 1)

    def test_needs_three_curvatures(self):
        with pytest.raises(GeometryError):
            eigen_pinch_lemma([0.9, 1.0], 0.9)

    def test_bounds_attained(self):
        eps = 0.8
        holds, slack = eigen_pinch_lemma([eps, eps, 1 / eps], eps)
        assert holds
        assert slack["lambda_m <= 1/eps"] == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(m=st.integers(3, 8), eps=st.floats(0.3, 1.0), seed=st.integers(0, 2**32 - 1))
def test_eigen_pinch_random(m, eps, seed):
    lam = random_pinched_lambda(np.random.default_rng(seed), m, eps)
    holds, _ = eigen_pinch_lemma(lam, eps)
    assert holds


def test_axis_length():
    assert Axis(1.0, 4.0).length == 3.0
