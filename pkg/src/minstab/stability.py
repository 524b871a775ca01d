"""Averaged second variation over test sections and the instability
certificate.

For a parallel vector ``U`` of the Euclidean space containing ``M1`` the
test section ``N_U`` is the part of ``U`` normal to ``Sigma`` inside ``M``.
Summing ``-<N_U, J N_U>`` over an orthonormal basis of that space gives a
frame-independent scalar ``F`` with a closed form in the ``M1`` components
of an adapted frame. Positive total ``F`` forces some ``N_U`` to decrease
volume to second order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import FundamentalData, PinchReport
from .immersion import NodeGeometry, QuadratureMesh, SecondFormData, SigmaChart
from .product import AdaptedFrame, trace_matrices

__all__ = [
    "TestSection",
    "PointStability",
    "NormalField",
    "StabilityReport",
    "Classification",
    "StabilityError",
    "test_section",
    "pointwise_F",
    "sphere_shape_matrix",
    "F_split",
    "relation_residual",
    "f_bound",
    "F_lower_bound",
    "case2_coefficient",
    "case2_bound",
    "section_field",
    "finite_difference_field",
    "q_density",
    "quadratic_form_Q",
    "certify",
    "classify_A",
    "VERDICTS",
]

VERDICTS = ("UNSTABLE_CERTIFIED", "INCONCLUSIVE", "HYPOTHESIS_VIOLATED", "NOT_MINIMAL")


class StabilityError(ValueError):
    pass


# --------------------------------------------------------------------------
# Test sections

@dataclass
class TestSection:
    U: np.ndarray
    tangent_part: np.ndarray
    normal_part: np.ndarray
    nu_component: float
    grad_perp: np.ndarray  # (n, D): covariant normal derivative along e_i
    decomposition_residual: float

    __test__ = False  # not a pytest class


def test_section(U, frame: AdaptedFrame, fd: FundamentalData, second: SecondFormData) -> TestSection:
    """Split ``U`` into tangent, normal-in-``M`` and ``M1``-normal parts.

    The normal derivative uses the closed form
    ``-h(e_i, T_U) + <U, nu> sum_b <B1(e_i^1, e_b^1), nu> e_b``.
    """
    U = np.asarray(U, dtype=float)
    split = frame.split
    D = frame.vectors.shape[1]
    Ufull = np.zeros(D)
    Ufull[:split] = U
    t = frame.tangent @ Ufull
    nrm = frame.normal @ Ufull
    T_U = t @ frame.tangent
    N_U = nrm @ frame.normal
    nu_c = float(U @ fd.nu)
    full_nu = np.zeros(D)
    full_nu[:split] = fd.nu
    resid = float(np.abs(Ufull - T_U - N_U - nu_c * full_nu).max())
    W = fd.shape_matrix
    b = frame.m1_tangent @ W @ frame.m1_normal.T  # (n, p)
    h_t = np.einsum("j,ijp->ip", t, second.h)
    grad = (-h_t + nu_c * b) @ frame.normal
    return TestSection(U, T_U, N_U, nu_c, grad, resid)


# --------------------------------------------------------------------------
# Pointwise F and its split

def _shape_list(shape) -> list:
    if isinstance(shape, FundamentalData):
        return [shape.shape_matrix]
    return [np.asarray(W, dtype=float) for W in shape]


def pointwise_F(frame: AdaptedFrame, shape, sphere_curvature: float = 0.0) -> float:
    """Averaged second variation ``F`` at one node.

    ``shape`` is the ``M1`` data (its second fundamental form along its unit
    normal) or a list of ambient symmetric matrices ``W_mu``, one per normal
    direction, with ``B1(X, Y) = sum_mu (X^T W_mu Y) nu_mu``. A positive
    ``sphere_curvature`` ``c`` treats ``B1`` as the second fundamental form
    inside a sphere of curvature ``c`` and adds the matching umbilic terms.
    """
    n = frame.n
    Et, En = frame.m1_tangent, frame.m1_normal
    F = 0.0
    for W in _shape_list(shape):
        bt = np.einsum("ia,ab,ib->i", Et, W, Et)
        bn = np.einsum("ia,ab,ib->i", En, W, En)
        bx = Et @ W @ En.T
        F += bt.sum() * bn.sum() - 2.0 * np.sum(bx**2)
    if sphere_curvature:
        c = float(sphere_curvature)
        nt = np.sum(Et**2, axis=1)
        nn = np.sum(En**2, axis=1)
        F += c * (nt.sum() * nn.sum() - 2.0 * np.sum((Et @ En.T) ** 2))
    return float(F)


def sphere_shape_matrix(fd: FundamentalData, curvature: float) -> tuple:
    """Second fundamental form of ``M1`` inside the round sphere of the given
    curvature centred at the origin, as a matrix along ``nu``.

    Returns the matrix and the distance of the node from that sphere, which
    is zero exactly when ``M1`` lies in it there.
    """
    c = float(curvature)
    T = fd.tangent_basis
    x = np.asarray(fd.x, dtype=float)
    Wsph = fd.shape_matrix + c * float(x @ fd.nu) * (T @ T.T)
    off_sphere = abs(float(x @ x) - 1.0 / c) + float(np.abs(T.T @ x).max())
    return Wsph, off_sphere


@dataclass
class PointStability:
    F: float
    F1: float
    F2: float
    F3: float
    c_tangent: np.ndarray  # (n, m1)
    c_normal: np.ndarray  # (p, m1)
    G: np.ndarray  # (m1, m1)
    trA: float
    trA2: float

    @property
    def identity_residual(self) -> float:
        return abs(self.F - (self.F1 + self.F2 + self.F3))


def F_split(frame: AdaptedFrame, fd: FundamentalData, epsilon: float) -> PointStability:
    """Split ``F`` into the trace part, the curvature-spread part and the
    pinching part, which is nonnegative when all ``lam_r lam_s >= eps^2``."""
    e2 = epsilon * epsilon
    lam = fd.lam
    m1 = lam.size
    n = frame.n
    dirs = fd.principal_dirs
    ct = frame.m1_tangent @ dirs
    cn = frame.m1_normal @ dirs
    mats = trace_matrices(frame)
    trA = float(np.trace(mats.A))
    trA2 = float(np.sum(mats.A * mats.A))
    F1 = e2 / 4.0 * ((n + trA) * (2 * m1 - n - trA) - 2 * n + 2 * trA2)
    st = ct**2  # (n, m1)
    sn = cn**2
    F2 = float(np.sum((e2 - lam**2) * sn.sum(axis=0) * st.sum(axis=0)))
    tt = ct.T @ ct
    nn = cn.T @ cn
    a = sn.sum(axis=0)
    b = st.sum(axis=0)
    G = 2 * tt**2 + 2 * nn**2 + np.outer(a, b) + np.outer(b, a)
    off = ~np.eye(m1, dtype=bool)
    F3 = 0.5 * float(np.sum(((np.outer(lam, lam) - e2) * G)[off]))
    return PointStability(
        F=pointwise_F(frame, fd), F1=float(F1), F2=F2, F3=F3,
        c_tangent=ct, c_normal=cn, G=G, trA=trA, trA2=trA2,
    )


def relation_residual(frame: AdaptedFrame, fd: FundamentalData) -> dict:
    """Residuals of the completeness relations for the coefficients
    ``c_A^r = <e_A^1, e~_r>``."""
    dirs = fd.principal_dirs
    ct = frame.m1_tangent @ dirs
    cn = frame.m1_normal @ dirs
    m1 = dirs.shape[1]
    return {
        "completeness": float(np.abs(ct.T @ ct + cn.T @ cn - np.eye(m1)).max()),
        "tangent_gram": float(np.abs(ct @ ct.T - frame.m1_tangent @ frame.m1_tangent.T).max(initial=0.0)),
        "normal_gram": float(np.abs(cn @ cn.T - frame.m1_normal @ frame.m1_normal.T).max(initial=0.0)),
    }


def f_bound(x, n: int, m1: int, epsilon: float):
    """Linear function ``f`` with ``F >= eps^2/4 (tr A + n) f(tr A)``."""
    k = 1.0 - 1.0 / epsilon**4
    return ((2.0 - n) / n - k / m1) * x + 2 * m1 - n - 2 + k * (2.0 - n / m1)


def F_lower_bound(trA, n: int, m1: int, epsilon: float):
    return epsilon**2 / 4.0 * (trA + n) * f_bound(trA, n, m1, epsilon)


def case2_coefficient(m1: int, epsilon: float) -> float:
    """``m1 - 1 - 1/eps^4``; vanishes at ``eps^2 = 1/sqrt(m1 - 1)``."""
    return m1 - 1 - 1.0 / epsilon**4


def case2_bound(trA, n: int, m1: int, epsilon: float):
    """Lower bound on ``F`` when ``n > m1``, in terms of the trace of the
    ``m1``-block of ``A`` complementary to its forced ``-1`` eigenspace."""
    t = trA + n - m1
    return epsilon**2 / (4.0 * m1) * case2_coefficient(m1, epsilon) * (m1**2 - t**2)


# --------------------------------------------------------------------------
# Second variation

@dataclass
class NormalField:
    """Normal section sampled at nodes: values ``(K, D)`` and covariant
    normal derivatives ``(K, n, D)``."""

    values: np.ndarray
    grad_perp: np.ndarray

    def scaled(self, t: float) -> "NormalField":
        return NormalField(t * self.values, t * self.grad_perp)


def section_field(U, nodes: Sequence[NodeGeometry]) -> NormalField:
    secs = [test_section(U, g.frame, g.m1, g.second) for g in nodes]
    return NormalField(
        np.array([s.normal_part for s in secs]),
        np.array([s.grad_perp for s in secs]),
    )


def finite_difference_field(
    fn: Callable[[NodeGeometry], np.ndarray],
    sigma: SigmaChart,
    nodes: Sequence[NodeGeometry],
    step: float = 1e-5,
) -> NormalField:
    """Normal field ``fn`` with derivatives by central differences in the
    ``Sigma`` chart, projected onto the normal space."""
    U = np.array([g.u for g in nodes])
    K, n = U.shape
    values = np.array([fn(g) for g in nodes])
    shifted = []
    for a in range(n):
        for sgn in (1.0, -1.0):
            V = U.copy()
            V[:, a] += sgn * step
            shifted.append(V)
    geo = sigma.evaluate(np.concatenate(shifted))
    vals = np.array([fn(g) for g in geo]).reshape(n, 2, K, -1)
    dvals = (vals[:, 0] - vals[:, 1]) / (2 * step)  # (n, K, D)
    grads = np.empty((K, n, values.shape[1]))
    for k, g in enumerate(nodes):
        d = np.einsum("ai,ad->id", g.frame.tangent_coeffs, dvals[:, k])
        grads[k] = d @ g.frame.normal_projector()
    return NormalField(values, grads)


def q_density(eta, grad_perp, g: NodeGeometry, normal_tol: float = 1e-8) -> float:
    """Integrand ``|grad eta|^2 - sum_i <R(eta, e_i) e_i, eta> - |A_eta|^2``."""
    eta = np.asarray(eta, dtype=float)
    frame = g.frame
    off = eta - frame.normal_projector() @ eta
    if np.abs(off).max() > normal_tol * max(1.0, np.abs(eta).max()):
        raise StabilityError(f"field is not normal to Sigma at node {g.u.tolist()}")
    split = frame.split
    e1, e2 = eta[:split], eta[split:]
    curv = float(np.sum(g.m1.curvature_forms(e1, frame.m1_tangent)))
    if e2.size:
        curv += float(np.sum(g.m2.curvature_forms(e2, frame.tangent[:, split:])))
    A = g.second.shape_operator(eta)
    return float(np.sum(grad_perp**2) - curv - np.sum(A**2))


def quadratic_form_Q(eta: NormalField, nodes: Sequence[NodeGeometry], mesh: QuadratureMesh) -> float:
    """Second variation ``Q(eta)`` in first-order (Dirichlet) form."""
    if eta.grad_perp is None:
        raise StabilityError("normal field lacks derivative data")
    dens = np.array(
        [q_density(eta.values[k], eta.grad_perp[k], g) for k, g in enumerate(nodes)]
    )
    return float(np.sum(mesh.weights * dens))


# --------------------------------------------------------------------------
# Classification and certificate

@dataclass
class Classification:
    case: str | None  # "Case1", "Case2or3", "Case4" or None
    distances: dict

    def to_dict(self) -> dict:
        return {"case": self.case, "distances": self.distances}


def classify_A(A_field, n: int, m1: int, tol: float = 1e-8) -> Classification:
    """Match ``A`` at every node against ``I_n`` (needs ``n == m1``),
    ``-I_n``, and ``-I_(n-m1) + I_m1`` (needs ``n > m1``).

    Forms are compared through sorted eigenvalues, which is the smallest
    Frobenius distance over frame rotations; the distance reported is the
    worst over nodes.
    """
    forms = {"Case2or3": -np.ones(n)}
    if n == m1:
        forms["Case1"] = np.ones(n)
    if n > m1:
        forms["Case4"] = np.concatenate([-np.ones(n - m1), np.ones(m1)])
    spectra = [np.linalg.eigvalsh(0.5 * (A + A.T)) for A in A_field]
    dist = {
        case: float(max(np.linalg.norm(s - ref) for s in spectra)) for case, ref in forms.items()
    }
    best = min(dist, key=dist.get)
    return Classification(best if dist[best] <= tol else None, dist)


@dataclass
class StabilityReport:
    pinch: PinchReport | None
    minimality_residual: float
    integral_F: float
    F_min: float
    F_max: float
    per_basis_Q: list
    cross_check_residual: float
    verdict: str
    certificate_valid: bool
    classification: Classification | None
    volume: float
    cert_tol: float
    minimality_tol: float
    F3_min: float = 0.0
    destabilizing_section: int | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "certificate_valid": self.certificate_valid,
            "integral_F": self.integral_F,
            "F_min": self.F_min,
            "F_max": self.F_max,
            "F3_min": self.F3_min,
            "volume": self.volume,
            "per_basis_Q": list(self.per_basis_Q),
            "cross_check_residual": self.cross_check_residual,
            "destabilizing_section": self.destabilizing_section,
            "minimality_residual": self.minimality_residual,
            "tolerances": {"certificate": self.cert_tol, "minimality": self.minimality_tol},
            "classification": None if self.classification is None else self.classification.to_dict(),
            "pinch": None if self.pinch is None else self.pinch.to_dict(),
            "warnings": list(self.warnings),
        }


def certify(
    integral_F: float,
    volume: float,
    minimality_residual: float,
    pinch: PinchReport | None,
    per_basis_Q: Sequence[float] = (),
    F_range: tuple = (0.0, 0.0),
    F3_min: float = 0.0,
    classification: Classification | None = None,
    cert_tol: float | None = None,
    minimality_tol: float = 1e-6,
) -> StabilityReport:
    """Turn integrated quantities into a verdict.

    ``UNSTABLE_CERTIFIED`` needs minimality, passing pinching, and
    ``integral_F > cert_tol``. Anything within ``cert_tol`` of zero or below
    it is ``INCONCLUSIVE``: a nonpositive total never proves stability.
    ``certificate_valid`` records the instability conclusion on its own,
    which does not depend on pinching.
    """
    cert_tol = 1e-6 * volume if cert_tol is None else cert_tol
    minimal = minimality_residual <= minimality_tol
    positive = integral_F > cert_tol
    warnings = []
    pinch_ok = pinch is not None and pinch.passed
    if pinch is None:
        warnings.append("pinching not checked; theorem hypotheses unverified")
    if F3_min < -1e-12:
        warnings.append(f"pinching part of F is negative at some node ({F3_min:.3e})")
    if not minimal:
        verdict = "NOT_MINIMAL"
    elif not pinch_ok or F3_min < -1e-12:
        verdict = "HYPOTHESIS_VIOLATED"
    elif positive:
        verdict = "UNSTABLE_CERTIFIED"
    else:
        verdict = "INCONCLUSIVE"
    Qs = [float(q) for q in per_basis_Q]
    cross = abs(integral_F + sum(Qs)) if Qs else float("nan")
    worst = int(np.argmin(Qs)) if Qs and min(Qs) < 0 else None
    return StabilityReport(
        pinch=pinch,
        minimality_residual=float(minimality_residual),
        integral_F=float(integral_F),
        F_min=float(F_range[0]),
        F_max=float(F_range[1]),
        per_basis_Q=Qs,
        cross_check_residual=float(cross),
        verdict=verdict,
        certificate_valid=bool(minimal and positive),
        classification=classification,
        volume=float(volume),
        cert_tol=float(cert_tol),
        minimality_tol=float(minimality_tol),
        F3_min=float(F3_min),
        destabilizing_section=worst if positive else None,
        warnings=warnings,
    )
