import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minstab.geometry import FundamentalData, pinch_check, sphere_chart
from minstab.immersion import SigmaChart
from minstab.product import EmbeddedFactor, trace_matrices
from minstab.sampling import random_frame, random_sample
from minstab.scenarios import scenario
from minstab.stability import (
    NormalField,
    StabilityError,
    F_lower_bound,
    F_split,
    case2_bound,
    case2_coefficient,
    certify,
    classify_A,
    f_bound,
    finite_difference_field,
    pointwise_F,
    q_density,
    quadratic_form_Q,
    section_field,
    sphere_shape_matrix,
    test_section as decompose,
)

from oracles import curve_length

TWO_PI = 2 * np.pi


def equator(resolution=512):
    sigma = scenario("equator-circle").build()[2]
    mesh = sigma.mesh(resolution)
    return sigma, mesh, sigma.evaluate(mesh.nodes)


def scalar_normal_field(nodes, f, df):
    """``f(t) nu`` on a circle parametrised by ``t`` with unit speed."""
    nu = np.array([g.frame.normal[0] for g in nodes])
    t = np.array([g.u[0] for g in nodes])
    speed = np.array([g.volume_element for g in nodes])
    vals = f(t)[:, None] * nu
    grads = (df(t) / speed)[:, None, None] * nu[:, None, :]
    return NormalField(vals, grads)


# --------------------------------------------------------------------------
# test sections

class TestSections:
    def setup_method(self):
        self.sigma = scenario("equator-circle").build()[2]

    def node(self, t):
        return self.sigma.evaluate([[t]])[0]

    def test_vertical_vector_is_normal(self):
        g = self.node(0.8)
        s = decompose([0, 0, 1.0], g.frame, g.m1, g.second)
        assert np.allclose(s.tangent_part, 0, atol=1e-15)
        assert np.allclose(s.normal_part, [0, 0, 1], atol=1e-15)

    def test_tangent_vector(self):
        g = self.node(0.0)
        assert np.allclose(g.position, [0, 1, 0], atol=1e-15)
        s = decompose([1.0, 0, 0], g.frame, g.m1, g.second)
        assert np.allclose(s.tangent_part, [1, 0, 0], atol=1e-15)
        assert np.allclose(s.normal_part, 0, atol=1e-15)

    def test_radial_vector(self):
        g = self.node(1.3)
        s = decompose(g.position, g.frame, g.m1, g.second)
        assert np.allclose(s.tangent_part, 0, atol=1e-15)
        assert np.allclose(s.normal_part, 0, atol=1e-15)
        assert abs(s.nu_component) == pytest.approx(1.0)

    def test_decomposition_on_clifford_torus(self):
        sigma = scenario("clifford-torus").build()[2]
        rng = np.random.default_rng(0)
        for g in sigma.evaluate(rng.uniform(0, TWO_PI, (20, 2))):
            s = decompose(rng.standard_normal(4), g.frame, g.m1, g.second)
            assert s.decomposition_residual < 1e-10
            assert np.allclose(g.frame.tangent @ s.normal_part, 0, atol=1e-13)

    def test_closed_form_normal_derivative_matches_differences(self):
        sigma = scenario("clifford-torus").build()[2]
        nodes = sigma.evaluate(sigma.mesh([8, 8]).nodes[::5])
        U = np.array([0.3, -0.5, 0.8, 0.1])
        exact = section_field(U, nodes)
        fd = finite_difference_field(
            lambda g: decompose(U, g.frame, g.m1, g.second).normal_part, sigma, nodes
        )
        assert np.abs(exact.grad_perp - fd.grad_perp).max() < 1e-8


# --------------------------------------------------------------------------
# pointwise F

class TestPointwiseF:
    @pytest.mark.parametrize("name, expect", [("great-sphere", 2.0), ("clifford-torus", 2.0)])
    def test_unit_sphere_value(self, name, expect):
        sigma = scenario(name).build()[2]
        for g in sigma.evaluate(sigma.mesh(8).nodes):
            assert pointwise_F(g.frame, g.m1) == pytest.approx(expect, abs=1e-12)

    @pytest.mark.parametrize("name", ["slice-m1", "slice-m2", "product-geodesic"])
    def test_slices_vanish(self, name):
        sigma = scenario(name).build()[2]
        for g in sigma.evaluate(sigma.mesh(8).nodes[::37]):
            assert pointwise_F(g.frame, g.m1) == pytest.approx(0.0, abs=1e-13)

    @settings(max_examples=100, deadline=None)
    @given(m=st.integers(3, 6), data=st.data(), seed=st.integers(0, 2**32 - 1))
    def test_sphere_value_any_plane(self, m, data, seed):
        n = data.draw(st.integers(1, m - 1))
        frame, x, T = random_frame(np.random.default_rng(seed), m, 0, n)
        fd = FundamentalData.from_principal(-x, T, np.ones(m))
        assert pointwise_F(frame, fd) == pytest.approx(n * (m - n), abs=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(m=st.integers(3, 6), data=st.data(), seed=st.integers(0, 2**32 - 1))
    def test_sphere_ambient_presentation_agrees(self, m, data, seed):
        n = data.draw(st.integers(1, m - 1))
        frame, x, T = random_frame(np.random.default_rng(seed), m, 0, n)
        fd = FundamentalData.from_principal(-x, T, np.ones(m), x=x)
        W, off = sphere_shape_matrix(fd, 1.0)
        assert off < 1e-12
        assert np.abs(W).max() < 1e-12
        assert pointwise_F(frame, [W], sphere_curvature=1.0) == pytest.approx(pointwise_F(frame, fd), abs=1e-9)

    def test_sphere_ambient_route_in_pipeline(self):
        from minstab.config import AnalysisConfig
        from minstab.pipeline import run_analysis
        from minstab.scenarios import scenario_text

        text = scenario_text("great-sphere").replace('epsilon = "theorem"', 'epsilon = "theorem"\nsphere_curvature = 1.0')
        rep = run_analysis(AnalysisConfig.from_toml(text)).report
        assert rep.stability["integral_F"] == pytest.approx(8 * np.pi, rel=1e-12)
        assert not rep.stability["warnings"]


class TestSplit:
    def test_slice_node_has_zero_trace_part(self):
        sigma = scenario("slice-m1").build()[2]
        g = sigma.evaluate([[1.0, 1.2, 0.4]])[0]
        ps = F_split(g.frame, g.m1, (3 - 1) ** -0.25)
        assert ps.trA == pytest.approx(3.0)
        assert ps.F1 == pytest.approx(0.0, abs=1e-14)
        assert ps.F == pytest.approx(0.0, abs=1e-14)

    def test_round_data_at_unit_epsilon(self):
        rng = np.random.default_rng(2)
        frame, x, T = random_frame(rng, 4, 2, 3)
        fd = FundamentalData.from_principal(-x, T, np.ones(4))
        ps = F_split(frame, fd, 1.0)
        assert ps.F2 == 0.0 and ps.F3 == 0.0
        assert ps.identity_residual < 1e-12

    def test_G_is_symmetric_and_nonnegative(self):
        s = random_sample(np.random.default_rng(4), 4, 2, 3)
        G = F_split(s.frame, s.fd, s.epsilon).G
        assert np.allclose(G, G.T)
        assert G.min() >= 0

    def test_total_F2_is_eigenbasis_invariant(self):
        # a repeated curvature leaves a rotation freedom inside its eigenspace
        rng = np.random.default_rng(6)
        frame, x, T = random_frame(rng, 4, 2, 3)
        lam = np.array([0.9, 0.9, 1.0, 1.05])
        R = np.eye(4)
        c, s = np.cos(0.7), np.sin(0.7)
        R[:2, :2] = [[c, -s], [s, c]]
        a = F_split(frame, FundamentalData.from_principal(-x, T, lam), 0.9)
        b = F_split(frame, FundamentalData.from_principal(-x, T @ R, lam), 0.9)
        assert a.F2 == pytest.approx(b.F2, abs=1e-13)
        assert a.F3 == pytest.approx(b.F3, abs=1e-13)
        assert a.F == pytest.approx(b.F, abs=1e-13)


class TestBounds:
    def test_threshold_values_m1_3(self):
        eps = 2 ** -0.25
        assert f_bound(-2, 2, 3, eps) == pytest.approx(0.0, abs=1e-14)
        assert f_bound(2, 2, 3, eps) == pytest.approx(4 / 3, abs=1e-14)

    def test_second_case_coefficient_vanishes(self):
        assert case2_coefficient(5, 0.5**0.5) == pytest.approx(0.0, abs=1e-14)

    @settings(max_examples=300, deadline=None)
    @given(m1=st.integers(3, 5), m2=st.integers(1, 3), data=st.data(), seed=st.integers(0, 2**32 - 1))
    def test_lower_bound_holds(self, m1, m2, data, seed):
        n = data.draw(st.integers(1, m1 + m2 - 1))
        s = random_sample(np.random.default_rng(seed), m1, m2, n)
        ps = F_split(s.frame, s.fd, s.epsilon)
        bound = F_lower_bound if n <= m1 else case2_bound
        assert ps.F >= bound(ps.trA, n, m1, s.epsilon) - 1e-9
        assert ps.F3 >= -1e-12


# --------------------------------------------------------------------------
# second variation

class TestQ:
    @pytest.mark.parametrize(
        "f, df, expect",
        [
            (lambda t: np.ones_like(t), lambda t: np.zeros_like(t), -TWO_PI),
            (np.cos, lambda t: -np.sin(t), 0.0),
            (lambda t: np.cos(2 * t), lambda t: -2 * np.sin(2 * t), 3 * np.pi),
        ],
    )
    def test_equator_spectrum(self, f, df, expect):
        _, mesh, nodes = equator()
        Q = quadratic_form_Q(scalar_normal_field(nodes, f, df), nodes, mesh)
        assert Q == pytest.approx(expect, abs=1e-10)

    def test_difference_field_agrees_with_closed_form(self):
        sigma, mesh, nodes = equator(64)

        def field(g):
            return np.cos(2 * g.u[0]) * g.frame.normal[0]

        fd = finite_difference_field(field, sigma, nodes)
        Q = quadratic_form_Q(fd, nodes, mesh)
        assert Q == pytest.approx(3 * np.pi, abs=1e-6)

    def test_arclength_second_derivative(self):
        # move each point along the great circle through it in the normal direction
        t = np.linspace(0, TWO_PI, 4096, endpoint=False)
        p = np.column_stack([np.cos(t), np.sin(t), np.zeros_like(t)])
        nu = np.array([0, 0, 1.0])

        def length(s):
            return curve_length(np.cos(s) * p + np.sin(s) * nu)

        s = 1e-3
        second = (length(s) - 2 * length(0) + length(-s)) / s**2
        _, mesh, nodes = equator()
        Q = quadratic_form_Q(scalar_normal_field(nodes, np.ones_like, np.zeros_like), nodes, mesh)
        assert Q == pytest.approx(second, rel=0.01)

    @pytest.mark.parametrize("t", [-2.0, 0.5, 3.0])
    def test_quadratic_scaling(self, t):
        sigma = scenario("clifford-torus").build()[2]
        mesh = sigma.mesh([8, 8])
        nodes = sigma.evaluate(mesh.nodes)
        eta = section_field([0.2, 0.9, -0.4, 0.3], nodes)
        assert quadratic_form_Q(eta.scaled(t), nodes, mesh) == pytest.approx(
            t * t * quadratic_form_Q(eta, nodes, mesh), rel=1e-12
        )

    def test_rejects_non_normal_field(self):
        _, _, nodes = equator(8)
        g = nodes[0]
        with pytest.raises(StabilityError, match="not normal"):
            q_density(g.frame.tangent[0], np.zeros((1, 3)), g)

    def test_rejects_missing_derivatives(self):
        _, mesh, nodes = equator(8)
        with pytest.raises(StabilityError):
            quadratic_form_Q(NormalField(np.zeros((8, 3)), None), nodes, mesh)

    def test_basis_trace_is_invariant(self):
        sigma = scenario("clifford-torus").build()[2]
        mesh = sigma.mesh([12, 12])
        nodes = sigma.evaluate(mesh.nodes)
        R, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((4, 4)))
        std = sum(quadratic_form_Q(section_field(e, nodes), nodes, mesh) for e in np.eye(4))
        rot = sum(quadratic_form_Q(section_field(e, nodes), nodes, mesh) for e in R.T)
        assert rot == pytest.approx(std, rel=1e-10)

    def test_integral_F_is_invariant_under_ambient_rotation(self):
        R, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((4, 4)))
        base = ["cos(e)*cos(s)", "cos(e)*sin(s)", "sin(e)*cos(t)", "sin(e)*sin(t)"]
        rotated = [" + ".join(f"({float(R[i, j])!r})*{base[j]}" for j in range(4)) for i in range(4)]
        from minstab.geometry import custom_chart

        values = []
        for comps in (base, rotated):
            chart = custom_chart(comps, ["e", "s", "t"], [(0, np.pi / 2), (0, TWO_PI, True), (0, TWO_PI, True)])
            sigma = SigmaChart.build(
                chart, EmbeddedFactor.point(), ["a", "b"], ["pi/4", "a", "b"], [],
                [(0, TWO_PI, True), (0, TWO_PI, True)],
            )
            mesh = sigma.mesh([12, 12])
            F = [pointwise_F(g.frame, g.m1) for g in sigma.evaluate(mesh.nodes)]
            values.append(float(np.sum(mesh.weights * F)))
        assert values[1] == pytest.approx(values[0], rel=1e-10)


# --------------------------------------------------------------------------
# certificate and classification

PASS = pinch_check(sphere_chart(3), grid=8)
FAIL = pinch_check(sphere_chart(3, radius=2.0), grid=8)


class TestCertify:
    def test_positive_integral_is_certified(self):
        rep = certify(8 * np.pi, 4 * np.pi, 0.0, PASS, per_basis_Q=[0, 0, -8 * np.pi, 0])
        assert rep.verdict == "UNSTABLE_CERTIFIED"
        assert rep.certificate_valid
        assert rep.destabilizing_section == 2
        assert rep.cross_check_residual == pytest.approx(0.0, abs=1e-12)

    def test_zero_is_inconclusive(self):
        rep = certify(1e-9, 1.0, 0.0, PASS)
        assert rep.verdict == "INCONCLUSIVE" and not rep.certificate_valid

    def test_negative_is_inconclusive_never_stable(self):
        rep = certify(-5.0, 1.0, 0.0, PASS, per_basis_Q=[2.0, 3.0])
        assert rep.verdict == "INCONCLUSIVE"
        assert rep.destabilizing_section is None

    def test_not_minimal_takes_precedence(self):
        rep = certify(5.0, 1.0, 0.1, FAIL)
        assert rep.verdict == "NOT_MINIMAL"

    def test_failed_pinching_keeps_certificate_flag(self):
        rep = certify(5.0, 1.0, 0.0, FAIL)
        assert rep.verdict == "HYPOTHESIS_VIOLATED"
        assert rep.certificate_valid

    def test_missing_pinch_report_is_not_a_pass(self):
        rep = certify(5.0, 1.0, 0.0, None)
        assert rep.verdict == "HYPOTHESIS_VIOLATED"
        assert any("not checked" in w for w in rep.warnings)

    def test_negative_pinching_part(self):
        rep = certify(5.0, 1.0, 0.0, PASS, F3_min=-1e-6)
        assert rep.verdict == "HYPOTHESIS_VIOLATED"

    def test_tolerance_scales_with_volume(self):
        rep = certify(1e-5, 20.0, 0.0, PASS)
        assert rep.cert_tol == pytest.approx(2e-5)
        assert rep.verdict == "INCONCLUSIVE"


class TestClassify:
    def test_identity(self):
        c = classify_A([np.eye(3)] * 4, 3, 3)
        assert c.case == "Case1"
        assert c.distances["Case1"] == 0.0

    def test_minus_identity(self):
        assert classify_A([-np.eye(2)] * 4, 2, 3).case == "Case2or3"

    def test_mixed_form_in_any_basis(self):
        R, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 4)))
        A = R @ np.diag([1.0, -1.0, 1.0, 1.0]) @ R.T
        assert classify_A([A], 4, 3).case == "Case4"

    def test_zero_matrix_matches_nothing(self):
        assert classify_A([np.zeros((2, 2))], 2, 3).case is None

    def test_point_factor_gives_identity_trace_matrix(self):
        sigma = scenario("clifford-torus").build()[2]
        g = sigma.evaluate([[0.3, 0.4]])[0]
        # M2 is a point, so P is the identity and A = I
        assert np.allclose(trace_matrices(g.frame).A, np.eye(2))
