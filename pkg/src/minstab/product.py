"""Product manifold ``M1 x M2`` embedded in ``R^N1 x R^k2``.

Vectors of the ambient product are flat arrays of length ``N1 + k2``; the
first ``N1`` entries are the ``M1`` part. The product structure ``P`` keeps
the first part and negates the second, so along any adapted frame the
``M1`` components are ``(e + P e) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import Expression, parse
from .geometry import RANK_TOL, Axis, GeometryError, RankDeficiencyError, chart_jet

__all__ = [
    "ProductVector",
    "apply_P",
    "P_matrix",
    "EmbeddedFactor",
    "FactorGeometry",
    "AdaptedFrame",
    "FrameError",
    "adapted_frame",
    "tm_basis",
    "TraceMatrices",
    "trace_matrices",
    "trace_P",
    "frame_identities_residual",
]


class FrameError(GeometryError):
    pass


@dataclass(frozen=True)
class ProductVector:
    v1: np.ndarray
    v2: np.ndarray

    @classmethod
    def from_flat(cls, v, split: int) -> "ProductVector":
        v = np.asarray(v, dtype=float)
        return cls(v[:split], v[split:])

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.v1, self.v2])

    def norm(self) -> float:
        return float(np.sqrt(self.v1 @ self.v1 + self.v2 @ self.v2))


def apply_P(v: ProductVector) -> ProductVector:
    return ProductVector(np.asarray(v.v1, dtype=float), -np.asarray(v.v2, dtype=float))


def P_matrix(n1: int, k2: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(n1), -np.ones(k2)]))


# --------------------------------------------------------------------------
# Second factor

@dataclass
class FactorGeometry:
    """Tangent basis and second fundamental form of ``M2`` at a point.

    ``B[i, j]`` is the ambient normal vector ``B2(t_i, t_j)`` for the
    orthonormal tangent columns ``t_i`` of ``T``.
    """

    x: np.ndarray
    T: np.ndarray
    B: np.ndarray

    @property
    def dim(self) -> int:
        return self.T.shape[1]

    def second_form(self, X, Y) -> np.ndarray:
        a, b = self.T.T @ X, self.T.T @ Y
        return np.einsum("i,j,ijk->k", a, b, self.B)

    def curvature_form(self, X, Y) -> float:
        """``<R2(X, Y) Y, X>`` from the Gauss equation."""
        if self.dim == 0:
            return 0.0
        bxx, byy, bxy = self.second_form(X, X), self.second_form(Y, Y), self.second_form(X, Y)
        return float(bxx @ byy - bxy @ bxy)

    def curvature_forms(self, X, Ys) -> np.ndarray:
        """:meth:`curvature_form` of ``X`` against each row of ``Ys``."""
        Ys = np.atleast_2d(Ys)
        if self.dim == 0:
            return np.zeros(len(Ys))
        a, bs = self.T.T @ X, Ys @ self.T
        bxx = np.einsum("i,j,ijk->k", a, a, self.B)
        byy = np.einsum("ri,rj,ijk->rk", bs, bs, self.B)
        bxy = np.einsum("i,rj,ijk->rk", a, bs, self.B)
        return byy @ bxx - np.sum(bxy**2, axis=1)


@dataclass(frozen=True)
class EmbeddedFactor:
    """The second factor: a point, or a chart of any codimension."""

    kind: str  # "point" or "chart"
    components: tuple = ()
    coordinates: tuple = ()
    domain: tuple = ()

    @classmethod
    def point(cls) -> "EmbeddedFactor":
        return cls("point")

    @classmethod
    def chart(cls, components, coordinates, domain, parameters=None) -> "EmbeddedFactor":
        coords = tuple(coordinates)
        comps = tuple(
            c if isinstance(c, Expression) else parse(c, coords, parameters) for c in components
        )
        dom = tuple(a if isinstance(a, Axis) else Axis(*a) for a in domain)
        if len(dom) != len(coords):
            raise GeometryError("domain needs one axis per coordinate")
        return cls("chart", comps, coords, dom)

    @classmethod
    def flat_torus(cls, r1: float = 1.0, r2: float = 1.0) -> "EmbeddedFactor":
        """``S^1(r1) x S^1(r2)`` in ``R^4``; intrinsically flat."""
        return cls.chart(
            ["r1*cos(a)", "r1*sin(a)", "r2*cos(b)", "r2*sin(b)"],
            ["a", "b"],
            [(0, 2 * np.pi, True), (0, 2 * np.pi, True)],
            {"r1": float(r1), "r2": float(r2)},
        )

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    @property
    def ambient_dim(self) -> int:
        return len(self.components)

    def jet(self, v):
        return chart_jet(self.components, self.coordinates, v)

    def geometry(self, v=()) -> FactorGeometry:
        if self.kind == "point":
            return FactorGeometry(np.zeros(0), np.zeros((0, 0)), np.zeros((0, 0, 0)))
        v = np.asarray(v, dtype=float)
        j = self.jet(v)
        return factor_geometry_from_jet(j.x, j.dx, j.ddx, v)


def factor_geometry_from_jet(x, dy, ddy, point=None) -> FactorGeometry:
    k, m = dy.shape
    if m == 0:
        return FactorGeometry(x, np.zeros((k, 0)), np.zeros((0, 0, k)))
    sv = np.linalg.svd(dy, compute_uv=False)
    if sv[-1] <= RANK_TOL:
        raise RankDeficiencyError(point if point is not None else x, sv[-1])
    T, R = np.linalg.qr(dy)
    flip = np.sign(np.diag(R))
    T, R = T * flip, R * flip[:, None]
    normal_proj = np.eye(k) - T @ T.T
    Bc = np.einsum("kl,lab->abk", normal_proj, ddy)
    Rinv = np.linalg.inv(R)
    B = np.einsum("ai,bj,abk->ijk", Rinv, Rinv, Bc)
    return FactorGeometry(x, T, B)


# --------------------------------------------------------------------------
# Frames

def tm_basis(T1: np.ndarray, T2: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning ``TM1 + TM2`` in the product ambient."""
    n1, m1 = T1.shape
    k2, m2 = T2.shape
    out = np.zeros((n1 + k2, m1 + m2))
    out[:n1, :m1] = T1
    out[n1:, m1:] = T2
    return out


@dataclass
class AdaptedFrame:
    """Orthonormal frame of ``TM`` along ``Sigma``: ``n`` tangent rows
    followed by ``p`` normal rows.

    ``tangent_coeffs`` maps coordinate partials to the tangent frame:
    ``e_i = sum_a tangent_coeffs[a, i] * d_a Phi``.
    """

    vectors: np.ndarray  # (n + p, D)
    n: int
    split: int  # ambient dimension of the M1 part
    m1: int
    m2: int
    tm: np.ndarray  # (D, m1 + m2)
    tangent_coeffs: np.ndarray
    point: tuple = ()

    def __post_init__(self):
        P = P_matrix(self.split, self.vectors.shape[1] - self.split)
        # cached M1 components e_A^1 = (e_A + P e_A) / 2
        self.m1_part = 0.5 * (self.vectors + self.vectors @ P)

    @property
    def p(self) -> int:
        return self.vectors.shape[0] - self.n

    @property
    def tangent(self) -> np.ndarray:
        return self.vectors[: self.n]

    @property
    def normal(self) -> np.ndarray:
        return self.vectors[self.n :]

    @property
    def m1_tangent(self) -> np.ndarray:
        return self.m1_part[: self.n, : self.split]

    @property
    def m1_normal(self) -> np.ndarray:
        return self.m1_part[self.n :, : self.split]

    def normal_projector(self) -> np.ndarray:
        return self.normal.T @ self.normal


def _complete(tm: np.ndarray, tangent: np.ndarray, count: int, tol: float) -> np.ndarray:
    """Extend ``tangent`` rows to an orthonormal basis of ``span(tm)``.

    Candidates are the ambient coordinate vectors projected into ``TM``; at
    each step the candidate with the largest remaining norm wins (lowest
    index on ties).
    """
    D = tm.shape[0]
    cand = (tm @ tm.T).copy()  # row k = projection of coordinate vector k
    cand -= (cand @ tangent.T) @ tangent
    chosen = []
    for _ in range(count):
        norms = np.linalg.norm(cand, axis=1)
        k = int(np.argmax(norms - 1e-14 * np.arange(D)))
        if norms[k] <= tol:
            raise FrameError(f"normal frame completion failed (residual {norms[k]:.3e})")
        e = cand[k] / norms[k]
        for prev in chosen:
            e -= (e @ prev) * prev
        e /= np.linalg.norm(e)
        chosen.append(e)
        cand -= np.outer(cand @ e, e)
    return np.array(chosen).reshape(count, D)


def adapted_frame(sigma_tangents, tm, split: int, m1: int, point=(), tol: float = 1e-10) -> AdaptedFrame:
    """Adapted orthonormal frame from the coordinate tangents of ``Sigma``.

    Parameters
    ----------
    sigma_tangents : (n, D) array
        Coordinate partials of the immersion, as rows.
    tm : (D, m1 + m2) array
        Orthonormal basis of ``TM`` (see :func:`tm_basis`).
    split : int
        Ambient dimension of the ``M1`` block.
    m1 : int
        Dimension of ``M1``.
    """
    t = np.atleast_2d(np.asarray(sigma_tangents, dtype=float))
    n, D = t.shape
    m = tm.shape[1]
    scale = max(np.abs(t).max(), 1.0)
    off = t - (t @ tm) @ tm.T
    if np.abs(off).max() > 1e-8 * scale:
        raise FrameError("tangent vectors do not lie in TM")
    Q, R = np.linalg.qr(t.T)
    flip = np.sign(np.diag(R))
    flip[flip == 0] = 1.0
    Q, R = Q * flip, R * flip[:, None]
    if np.abs(np.diag(R)).min() <= tol * scale:
        raise FrameError("tangent vectors are linearly dependent")
    e = Q.T
    normals = _complete(tm, e, m - n, tol)
    return AdaptedFrame(
        vectors=np.vstack([e, normals]),
        n=n,
        split=split,
        m1=m1,
        m2=m - m1,
        tm=tm,
        tangent_coeffs=np.linalg.inv(R),
        point=point,
    )


@dataclass
class TraceMatrices:
    A: np.ndarray
    B: np.ndarray
    symmetry_residual: float


def trace_matrices(frame: AdaptedFrame) -> TraceMatrices:
    """``A_ij = <e_i, P e_j>`` and ``B_ab = <e_a, P e_b>``, symmetrised."""
    P = P_matrix(frame.split, frame.vectors.shape[1] - frame.split)
    full = frame.vectors @ P @ frame.vectors.T
    n = frame.n
    A, B = full[:n, :n], full[n:, n:]
    res = max(np.abs(A - A.T).max(initial=0.0), np.abs(B - B.T).max(initial=0.0))
    return TraceMatrices(0.5 * (A + A.T), 0.5 * (B + B.T), float(res))


def trace_P(frame: AdaptedFrame) -> float:
    """Trace of ``P`` as a map on ``TM``, computed over the frame."""
    P = P_matrix(frame.split, frame.vectors.shape[1] - frame.split)
    return float(np.trace(frame.vectors @ P @ frame.vectors.T))


def frame_identities_residual(frame: AdaptedFrame, mats: TraceMatrices | None = None) -> dict:
    """Maximum absolute residual of each identity tying the ``M1``
    components of the frame to ``A``, ``B`` and ``m1``."""
    mats = trace_matrices(frame) if mats is None else mats
    n, p = frame.n, frame.p
    A, B = mats.A, mats.B
    P = P_matrix(frame.split, frame.vectors.shape[1] - frame.split)
    E1 = frame.m1_part
    G = E1 @ E1.T
    cross = frame.vectors[:n] @ P @ frame.vectors[n:].T
    Gt, Gn, Gtn = G[:n, :n], G[n:, n:], G[:n, n:]
    trA, trB = np.trace(A), np.trace(B)
    direct = np.hstack([frame.vectors[:, : frame.split], np.zeros_like(frame.vectors[:, frame.split :])])

    def mx(x):
        return float(np.max(np.abs(x), initial=0.0))

    return {
        "m1_part": mx(E1 - direct),
        "inner_tangent": mx(Gt - 0.5 * (np.eye(n) + A)),
        "inner_normal": mx(Gn - 0.5 * (np.eye(p) + B)),
        "inner_mixed": mx(Gtn - 0.5 * cross),
        "norms_tangent": abs(np.trace(Gt) - 0.5 * (n + trA)),
        "norms_normal": abs(np.trace(Gn) - 0.5 * (p + trB)),
        "squares_tangent": abs((Gt**2).sum() - 0.25 * (n + 2 * trA + np.trace(A @ A))),
        "squares_normal": abs((Gn**2).sum() - 0.25 * (p + 2 * trB + np.trace(B @ B))),
        "trace_sum": abs(trA + trB - (2 * frame.m1 - n - p)),
    }
