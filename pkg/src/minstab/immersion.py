"""Submanifold ``Sigma`` of the product, its second fundamental form, and
quadrature over ``Sigma``.

``Sigma`` is given by expressions mapping its coordinates to chart
coordinates of ``M1`` and of ``M2``. Evaluating the factor charts with those
coordinate jets bound in yields the jets of the composite immersion, so one
pass produces its first and second derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .expr import Expression, Jet2, evaluate, parse
from .geometry import (
    Axis,
    FundamentalData,
    GeometryError,
    HypersurfaceChart,
    RankDeficiencyError,
    RANK_TOL,
    _fundamental_from_jet,
)
from .product import (
    AdaptedFrame,
    EmbeddedFactor,
    FactorGeometry,
    adapted_frame,
    factor_geometry_from_jet,
    tm_basis,
)

__all__ = [
    "SigmaChart",
    "SecondFormData",
    "NodeGeometry",
    "QuadratureMesh",
    "parameter_rule",
    "euclidean_mesh",
    "second_form",
    "integrate",
]


def parameter_rule(domain: Sequence[Axis], resolution) -> tuple:
    """Tensor-product rule on a coordinate box.

    Periodic axes use the trapezoidal rule with nodes offset half a step
    from the box edge; other axes use Gauss-Legendre.

    Returns
    -------
    nodes : (K, d) array
    weights : (K,) array
        Coordinate-measure weights (no volume element).
    """
    if np.isscalar(resolution):
        resolution = [int(resolution)] * len(domain)
    pts, wts = [], []
    for ax, k in zip(domain, resolution):
        if ax.periodic:
            h = ax.length / k
            pts.append(ax.lo + (np.arange(k) + 0.5) * h)
            wts.append(np.full(k, h))
        else:
            x, w = np.polynomial.legendre.leggauss(k)
            pts.append(ax.lo + 0.5 * ax.length * (x + 1))
            wts.append(0.5 * ax.length * w)
    grids = np.meshgrid(*pts, indexing="ij")
    wgrids = np.meshgrid(*wts, indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=-1), axis=-1)
    return nodes, weights


@dataclass
class QuadratureMesh:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise GeometryError("quadrature weights must be positive")

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self) -> int:
        return len(self.weights)


def integrate(field, mesh: QuadratureMesh) -> float:
    """Weighted sum over the mesh nodes, in node order.

    ``field`` is an array of node values or a callable of one node.
    """
    if callable(field):
        values = np.array([field(u) for u in mesh.nodes], dtype=float)
    else:
        values = np.asarray(field, dtype=float)
    if values.shape != mesh.weights.shape:
        raise ValueError("field must provide one value per node")
    return float(np.sum(mesh.weights * values))


def euclidean_mesh(components, coordinates, domain, resolution, parameters=None) -> QuadratureMesh:
    """Quadrature mesh for a parametric map into Euclidean space."""
    coords = tuple(coordinates)
    comps = [c if isinstance(c, Expression) else parse(c, coords, parameters) for c in components]
    dom = [a if isinstance(a, Axis) else Axis(*a) for a in domain]
    nodes, w = parameter_rule(dom, resolution)
    seeds = dict(zip(coords, Jet2.seeds(nodes)))
    dphi = np.stack([evaluate(c, seeds).grad for c in comps], axis=-2)
    vol = np.sqrt(np.linalg.det(np.einsum("kna,knb->kab", dphi, dphi)))
    return QuadratureMesh(nodes, w * vol)


@dataclass
class SecondFormData:
    """Second fundamental form of ``Sigma`` in ``M`` at one node.

    ``h[i, j, a]`` is the component of ``h(e_i, e_j)`` along normal frame
    vector ``e_{n+a}``.
    """

    h: np.ndarray
    normal: np.ndarray  # (p, D) normal frame rows

    @property
    def mean_curvature(self) -> np.ndarray:
        return np.einsum("iia->a", self.h) @ self.normal

    @property
    def minimality_residual(self) -> float:
        return float(np.linalg.norm(np.einsum("iia->a", self.h)))

    @property
    def norm2(self) -> float:
        return float(np.sum(self.h**2))

    def shape_operator(self, eta) -> np.ndarray:
        """Matrix ``<A_eta e_i, e_j> = <h(e_i, e_j), eta>``."""
        return self.h @ (self.normal @ eta)

    def vector(self, i: int, j: int) -> np.ndarray:
        return self.h[i, j] @ self.normal

    def symmetry_residual(self) -> float:
        return float(np.abs(self.h - np.swapaxes(self.h, 0, 1)).max(initial=0.0))


@dataclass
class NodeGeometry:
    """Everything computed at one node of ``Sigma``."""

    u: np.ndarray
    position: np.ndarray
    m1: FundamentalData
    m2: FactorGeometry
    frame: AdaptedFrame
    second: SecondFormData
    volume_element: float

    @property
    def split(self) -> int:
        return self.frame.split


@dataclass(frozen=True)
class SigmaChart:
    """Parametrised ``Sigma -> M1 x M2`` through chart coordinates of the
    factors."""

    m1_chart: HypersurfaceChart
    m2: EmbeddedFactor
    coordinates: tuple
    m1_map: tuple
    m2_map: tuple
    domain: tuple

    @classmethod
    def build(cls, m1_chart, m2, coordinates, m1_map, m2_map, domain, parameters=None):
        coords = tuple(coordinates)

        def ex(s):
            return s if isinstance(s, Expression) else parse(str(s), coords, parameters)

        if len(m1_map) != m1_chart.m1:
            raise GeometryError("m1_map needs one expression per M1 chart coordinate")
        if len(m2_map) != m2.dim:
            raise GeometryError("m2_map needs one expression per M2 chart coordinate")
        dom = tuple(a if isinstance(a, Axis) else Axis(*a) for a in domain)
        if len(dom) != len(coords):
            raise GeometryError("domain needs one axis per coordinate")
        return cls(m1_chart, m2, coords, tuple(map(ex, m1_map)), tuple(map(ex, m2_map)), dom)

    @property
    def n(self) -> int:
        return len(self.coordinates)

    @property
    def split(self) -> int:
        return self.m1_chart.ambient_dim

    def _jets(self, U: np.ndarray):
        seeds = dict(zip(self.coordinates, Jet2.seeds(U)))
        u1 = [evaluate(e, seeds) for e in self.m1_map]
        u2 = [evaluate(e, seeds) for e in self.m2_map]
        phi1 = self.m1_chart.compose(dict(zip(self.m1_chart.coordinates, u1)))
        if self.m2.kind == "point":
            phi2 = []
        else:
            phi2 = [evaluate(c, dict(zip(self.m2.coordinates, u2))) for c in self.m2.components]
        phi = phi1 + phi2
        x = np.stack([j.value for j in phi], axis=-1)
        dphi = np.stack([j.grad for j in phi], axis=-2)
        ddphi = np.stack([j.hess for j in phi], axis=-3)
        c1 = np.stack([j.value for j in u1], axis=-1)
        c2 = np.stack([j.value for j in u2], axis=-1) if u2 else np.zeros(U.shape[:-1] + (0,))
        return x, dphi, ddphi, c1, c2

    def evaluate(self, U) -> list:
        """Geometry at each row of ``U`` (Sigma chart points)."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        x, dphi, ddphi, c1, c2 = self._jets(U)
        j1 = self.m1_chart.jet(c1)
        if self.m2.kind == "chart":
            j2 = self.m2.jet(c2)
        out = []
        for k in range(len(U)):
            fd = _fundamental_from_jet(j1.x[k], j1.dx[k], j1.ddx[k], c1[k])
            if self.m2.kind == "chart":
                f2 = factor_geometry_from_jet(j2.x[k], j2.dx[k], j2.ddx[k], c2[k])
            else:
                f2 = FactorGeometry(np.zeros(0), np.zeros((0, 0)), np.zeros((0, 0, 0)))
            out.append(_node(U[k], x[k], dphi[k], ddphi[k], fd, f2, self.split))
        return out

    def mesh(self, resolution) -> QuadratureMesh:
        nodes, w = parameter_rule(self.domain, resolution)
        _, dphi, _, _, _ = self._jets(nodes)
        vol = np.sqrt(np.linalg.det(np.einsum("kna,knb->kab", dphi, dphi)))
        return QuadratureMesh(nodes, w * vol)


def _node(u, x, dphi, ddphi, fd, f2, split) -> NodeGeometry:
    sv = np.linalg.svd(dphi, compute_uv=False)
    if sv[-1] <= RANK_TOL:
        raise RankDeficiencyError(u, sv[-1])
    tm = tm_basis(fd.tangent_basis, f2.T)
    frame = adapted_frame(dphi.T, tm, split, fd.m1, point=(fd.x, f2.x))
    C = frame.tangent_coeffs
    h_coord = np.einsum("dab,pd->abp", ddphi, frame.normal)
    h = np.einsum("ai,bj,abp->ijp", C, C, h_coord)
    second = SecondFormData(h, frame.normal)
    vol = float(np.prod(sv))
    return NodeGeometry(u, x, fd, f2, frame, second, vol)


def second_form(sigma: SigmaChart, node) -> tuple:
    """Second fundamental form and adapted frame of ``Sigma`` at ``node``."""
    g = sigma.evaluate(np.asarray(node, dtype=float)[None])[0]
    return g.second, g.frame
