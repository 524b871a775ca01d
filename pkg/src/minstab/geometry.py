"""Extrinsic geometry of a parametric hypersurface of Euclidean space.

Charts are lists of component expressions in the chart coordinates. Their
degree-2 jets give the tangent columns and second derivatives from which the
metric, unit normal and shape operator follow. Principal-plane sectional
curvatures of a Euclidean hypersurface are products of principal curvatures,
which is what the pinching check samples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import Expression, Jet2, evaluate, parse

__all__ = [
    "Axis",
    "GeometryError",
    "RankDeficiencyError",
    "PinchHypothesisError",
    "HypersurfaceChart",
    "ImmersionJet",
    "FundamentalData",
    "PinchReport",
    "sphere_chart",
    "ellipsoid_chart",
    "custom_chart",
    "unit_sphere_components",
    "fundamental_data",
    "fundamental_data_batch",
    "sectional_range",
    "pinch_epsilon2",
    "pinch_check",
    "ellipsoid_extremes",
    "eigen_pinch_lemma",
    "sample_grid",
]

RANK_TOL = 1e-8


class GeometryError(ValueError):
    pass


class RankDeficiencyError(GeometryError):
    def __init__(self, point, sigma_min):
        self.point = np.asarray(point)
        self.sigma_min = sigma_min
        super().__init__(
            f"immersion differential is rank deficient at {self.point.tolist()} "
            f"(smallest singular value {sigma_min:.3e})"
        )


class PinchHypothesisError(GeometryError):
    def __init__(self, pair, product, epsilon2):
        self.pair = pair
        self.product = product
        super().__init__(
            f"pinching violated by principal pair {pair}: product {product:.6g} "
            f"outside [{epsilon2:.6g}, 1]"
        )


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    periodic: bool = False

    @property
    def length(self) -> float:
        return self.hi - self.lo


def sample_grid(domain: Sequence[Axis], resolution) -> np.ndarray:
    """Cell-midpoint grid over a coordinate box, shape ``(K, len(domain))``.

    Midpoints keep samples off the box faces, where spherical charts
    degenerate.
    """
    if np.isscalar(resolution):
        resolution = [int(resolution)] * len(domain)
    axes = [
        ax.lo + (np.arange(k) + 0.5) * ax.length / k for ax, k in zip(domain, resolution)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class ImmersionJet:
    x: np.ndarray  # (..., N)
    dx: np.ndarray  # (..., N, m)
    ddx: np.ndarray  # (..., N, m, m)


@dataclass(frozen=True)
class HypersurfaceChart:
    """Parametrised hypersurface ``M1`` of ``R^(m1+1)``."""

    m1: int
    components: tuple  # m1 + 1 Expressions
    coordinates: tuple
    domain: tuple  # Axis per coordinate
    family: tuple = ("custom",)

    def __post_init__(self):
        if len(self.components) != self.m1 + 1:
            raise GeometryError(
                f"a hypersurface chart of dimension {self.m1} needs {self.m1 + 1} "
                f"components, got {len(self.components)}"
            )
        if len(self.coordinates) != self.m1 or len(self.domain) != self.m1:
            raise GeometryError("coordinates and domain must have one entry per dimension")

    @property
    def ambient_dim(self) -> int:
        return self.m1 + 1

    def jet(self, u) -> ImmersionJet:
        return chart_jet(self.components, self.coordinates, u)

    def compose(self, bindings: dict) -> list:
        """Component jets after substituting coordinate jets from ``bindings``."""
        return [evaluate(c, bindings) for c in self.components]

    def scaled(self, t: float) -> "HypersurfaceChart":
        comps = tuple(
            parse(f"{t!r}*({c.source or c})", self.coordinates, c.parameters)
            for c in self.components
        )
        return HypersurfaceChart(self.m1, comps, self.coordinates, self.domain, ("custom",))


def chart_jet(components, coordinates, u) -> ImmersionJet:
    u = np.asarray(u, dtype=float)
    seeds = Jet2.seeds(u)
    bindings = dict(zip(coordinates, seeds))
    jets = [evaluate(c, bindings) for c in components]
    return ImmersionJet(
        np.stack([j.value for j in jets], axis=-1),
        np.stack([j.grad for j in jets], axis=-2),
        np.stack([j.hess for j in jets], axis=-3),
    )


def unit_sphere_components(m: int, coords: Sequence[str]) -> list:
    """Component strings of the unit sphere ``S^m`` in hyperspherical form.

    The last component is ``cos(u1)``; earlier ones pick up a factor
    ``sin`` per angle, so the chart degenerates exactly where
    ``sin(u1)...sin(u_{m-1}) = 0``.
    """
    comps = []
    prefix = ""
    for k in range(m):
        u = coords[k]
        comps.append(f"{prefix}cos({u})")
        prefix += f"sin({u})*"
    comps.append(prefix[:-1])
    return comps[::-1]


def _sphere_domain(m: int) -> tuple:
    return tuple(Axis(0.0, np.pi) for _ in range(m - 1)) + (Axis(0.0, 2 * np.pi, True),)


def sphere_chart(m1: int, radius: float = 1.0) -> HypersurfaceChart:
    coords = tuple(f"u{k + 1}" for k in range(m1))
    comps = tuple(
        parse(f"r*{s}", coords, {"r": float(radius)})
        for s in unit_sphere_components(m1, coords)
    )
    return HypersurfaceChart(m1, comps, coords, _sphere_domain(m1), ("sphere", float(radius)))


def ellipsoid_chart(axes: Sequence[float]) -> HypersurfaceChart:
    """Ellipsoid ``sum x_k^2 / a_k^2 = 1``; component ``k`` is ``a_k`` times
    the matching unit-sphere component."""
    axes = [float(a) for a in axes]
    if any(a <= 0 for a in axes):
        raise GeometryError("ellipsoid semi-axes must be positive")
    m1 = len(axes) - 1
    coords = tuple(f"u{k + 1}" for k in range(m1))
    comps = tuple(
        parse(f"a{k + 1}*{s}", coords, {f"a{k + 1}": axes[k]})
        for k, s in enumerate(unit_sphere_components(m1, coords))
    )
    return HypersurfaceChart(m1, comps, coords, _sphere_domain(m1), ("ellipsoid", *axes))


def custom_chart(components, coordinates, domain, parameters=None) -> HypersurfaceChart:
    coords = tuple(coordinates)
    comps = tuple(
        c if isinstance(c, Expression) else parse(c, coords, parameters) for c in components
    )
    dom = tuple(a if isinstance(a, Axis) else Axis(*a) for a in domain)
    return HypersurfaceChart(len(coords), comps, coords, dom, ("custom",))


# --------------------------------------------------------------------------
# Fundamental forms

def _canonical_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    idx = np.argmax(np.abs(vecs) - 1e-12 * np.arange(vecs.shape[0])[:, None], axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


@dataclass
class FundamentalData:
    """First and second fundamental data of ``M1`` at one point.

    ``S`` is the shape operator in the orthonormal tangent basis
    ``tangent_basis`` (columns, ambient coordinates); ``principal_dirs``
    holds the principal directions as ambient columns ordered like ``lam``.
    The normal is oriented so that ``trace(S) >= 0``.
    """

    x: np.ndarray
    g: np.ndarray
    nu: np.ndarray
    tangent_basis: np.ndarray
    S: np.ndarray
    lam: np.ndarray
    principal_dirs: np.ndarray
    point: np.ndarray = field(default=None)

    @classmethod
    def from_principal(cls, nu, principal_dirs, lam, x=None) -> "FundamentalData":
        """Build data directly from a principal frame (no chart involved)."""
        nu = np.asarray(nu, dtype=float)
        dirs = np.asarray(principal_dirs, dtype=float)
        lam = np.asarray(lam, dtype=float)
        order = np.argsort(lam, kind="stable")
        lam, dirs = lam[order], dirs[:, order]
        m = lam.size
        x = np.zeros(nu.size) if x is None else np.asarray(x, dtype=float)
        return cls(x, np.eye(m), nu, dirs, np.diag(lam), lam, dirs)

    @property
    def m1(self) -> int:
        return self.lam.size

    @property
    def shape_matrix(self) -> np.ndarray:
        """Ambient symmetric matrix ``W`` with ``B1(X, Y) = (X^T W Y) nu``."""
        return (self.principal_dirs * self.lam) @ self.principal_dirs.T

    def second_form(self, X, Y) -> np.ndarray:
        return (np.asarray(X) @ self.shape_matrix @ np.asarray(Y)) * self.nu

    def curvature_form(self, X, Y) -> float:
        """``<R1(X, Y) Y, X>`` via the Gauss equation."""
        W = self.shape_matrix
        return float((X @ W @ X) * (Y @ W @ Y) - (X @ W @ Y) ** 2)

    def curvature_forms(self, X, Ys) -> np.ndarray:
        """:meth:`curvature_form` of ``X`` against each row of ``Ys``."""
        W = self.shape_matrix
        Ys = np.atleast_2d(Ys)
        wx = W @ X
        return (X @ wx) * np.einsum("ra,ab,rb->r", Ys, W, Ys) - (Ys @ wx) ** 2

    def sectional(self, X, Y) -> float:
        """Sectional curvature of the plane spanned by tangent vectors X, Y."""
        den = (X @ X) * (Y @ Y) - (X @ Y) ** 2
        return self.curvature_form(X, Y) / den


def _fundamental_from_jet(x, dx, ddx, point=None) -> FundamentalData:
    m = dx.shape[1]
    N = dx.shape[0]
    if N != m + 1:
        raise GeometryError("fundamental data requires a hypersurface (codimension 1)")
    sv = np.linalg.svd(dx, compute_uv=False)
    if sv[-1] <= RANK_TOL:
        raise RankDeficiencyError(point if point is not None else x, sv[-1])
    Q, R = np.linalg.qr(dx, mode="complete")
    T = Q[:, :m]
    R = R[:m, :]
    flip = np.sign(np.diag(R))
    T, R = T * flip, R * flip[:, None]
    nu = Q[:, m]
    II = np.einsum("nab,n->ab", ddx, nu)
    Rinv = np.linalg.inv(R)
    S = Rinv.T @ II @ Rinv
    S = 0.5 * (S + S.T)
    if np.trace(S) < 0:
        S, nu = -S, -nu
    try:
        lam, vecs = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"eigensolver failed: {exc}") from exc
    vecs = _canonical_signs(vecs)
    return FundamentalData(
        x=x, g=dx.T @ dx, nu=nu, tangent_basis=T, S=S, lam=lam,
        principal_dirs=T @ vecs, point=point,
    )


def fundamental_data(chart: HypersurfaceChart, u) -> FundamentalData:
    """Metric, unit normal, shape operator and principal curvatures at ``u``.

    Raises
    ------
    RankDeficiencyError
        If the smallest singular value of the differential is below 1e-8.
    """
    u = np.asarray(u, dtype=float)
    j = chart.jet(u)
    return _fundamental_from_jet(j.x, j.dx, j.ddx, u)


def fundamental_data_batch(chart: HypersurfaceChart, U) -> list:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    j = chart.jet(U)
    return [_fundamental_from_jet(j.x[k], j.dx[k], j.ddx[k], U[k]) for k in range(len(U))]


# --------------------------------------------------------------------------
# Pinching

def sectional_range(lam) -> tuple:
    """Extremes of ``lam[r] * lam[s]`` over ``r != s``."""
    lam = np.asarray(lam, dtype=float)
    if lam.size < 2:
        raise GeometryError("need at least two principal curvatures")
    prods = np.outer(lam, lam)[~np.eye(lam.size, dtype=bool)]
    return float(prods.min()), float(prods.max())


def pinch_epsilon2(m1: int, mode: str = "theorem", m: int | None = None) -> float:
    """Lower pinching constant: ``1/sqrt(m1-1)`` or, for a single
    hypersurface ambient of dimension ``m``, ``1/sqrt(m+1)``."""
    if mode == "theorem":
        if m1 < 3:
            raise GeometryError("the pinching threshold needs m1 >= 3")
        return 1.0 / np.sqrt(m1 - 1)
    if mode == "corollary":
        m = m1 if m is None else m
        if m < 3:
            raise GeometryError("the pinching threshold needs m >= 3")
        return 1.0 / np.sqrt(m + 1)
    raise GeometryError(f"unknown pinching mode {mode!r}")


@dataclass
class PinchReport:
    mode: str
    epsilon: float
    epsilon2: float
    K_min: float
    K_max: float
    pass_lower: bool
    pass_upper: bool
    worst_point: list | None
    samples: int
    tol: float
    notes: tuple = (
        "pinching verified by sampling principal-plane sections on a grid; "
        "no certified global bound",
        "completeness of M1 is assumed, not checked",
    )

    @property
    def passed(self) -> bool:
        return self.pass_lower and self.pass_upper

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "epsilon": self.epsilon,
            "epsilon2": self.epsilon2,
            "K_min": self.K_min,
            "K_max": self.K_max,
            "pass_lower": self.pass_lower,
            "pass_upper": self.pass_upper,
            "passed": self.passed,
            "worst_point": self.worst_point,
            "samples": self.samples,
            "tol": self.tol,
            "notes": list(self.notes),
        }


def pinch_check(
    chart: HypersurfaceChart,
    grid=12,
    mode: str = "theorem",
    m: int | None = None,
    tol: float = 1e-9,
    epsilon2: float | None = None,
) -> PinchReport:
    """Sample sectional curvatures of ``chart`` and test ``eps^2 <= K <= 1``.

    ``grid`` is a per-axis resolution (int or sequence) for a cell-midpoint
    grid, or an explicit ``(K, m1)`` array of chart points.
    """
    eps2 = pinch_epsilon2(chart.m1, mode, m) if epsilon2 is None else float(epsilon2)
    if isinstance(grid, np.ndarray) and grid.ndim == 2:
        pts = grid
    else:
        pts = sample_grid(chart.domain, grid)
    kmin = np.empty(len(pts))
    kmax = np.empty(len(pts))
    for k, fd in enumerate(fundamental_data_batch(chart, pts)):
        kmin[k], kmax[k] = sectional_range(fd.lam)
    i_lo, i_hi = int(np.argmin(kmin)), int(np.argmax(kmax))
    K_min, K_max = float(kmin[i_lo]), float(kmax[i_hi])
    pass_lower = K_min >= eps2 - tol
    pass_upper = K_max <= 1.0 + tol
    worst = None
    if not (pass_lower and pass_upper):
        low_gap = eps2 - K_min if not pass_lower else -np.inf
        high_gap = K_max - 1.0 if not pass_upper else -np.inf
        worst = pts[i_lo if low_gap >= high_gap else i_hi].tolist()
    return PinchReport(
        mode=mode if epsilon2 is None else "custom",
        epsilon=float(np.sqrt(eps2)),
        epsilon2=float(eps2),
        K_min=K_min,
        K_max=K_max,
        pass_lower=bool(pass_lower),
        pass_upper=bool(pass_upper),
        worst_point=worst,
        samples=len(pts),
        tol=tol,
    )


def ellipsoid_extremes(a) -> tuple:
    """Smallest and largest principal curvature over an ellipsoid with
    ascending semi-axes ``a``: ``a_1/a_max^2`` and ``a_max/a_1^2``."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise GeometryError("semi-axes must be positive")
    if np.any(np.diff(a) < 0):
        raise GeometryError("semi-axes must be sorted ascending")
    return float(a[0] / a[-1] ** 2), float(a[-1] / a[0] ** 2)


def eigen_pinch_lemma(lam, epsilon: float, tol: float = 1e-12) -> tuple:
    """Check the principal-curvature bounds implied by pairwise pinching.

    For ``m >= 3`` sorted curvatures with ``eps^2 <= lam_r lam_s <= 1``
    (``r != s``) one has ``eps^2 <= lam_1 <= 1``,
    ``eps <= lam_2..lam_{m-1} <= 1`` and ``eps <= lam_m <= 1/eps``.

    Returns
    -------
    holds : bool
    slack : dict
        Minimum slack of each bound (negative means violated).

    Raises
    ------
    PinchHypothesisError
        If the pairwise hypothesis fails, naming the offending pair.
    """
    lam = np.asarray(lam, dtype=float)
    m = lam.size
    if m < 3:
        raise GeometryError("the curvature bounds need m1 >= 3")
    if np.any(np.diff(lam) < 0) or lam[0] <= 0:
        raise GeometryError("principal curvatures must be positive and sorted ascending")
    e2 = epsilon * epsilon
    for r, s in itertools.combinations(range(m), 2):
        prod = lam[r] * lam[s]
        if prod < e2 - tol or prod > 1 + tol:
            raise PinchHypothesisError((r, s), prod, e2)
    mid = lam[1:-1]
    slack = {
        "lambda_1 >= eps^2": lam[0] - e2,
        "lambda_1 <= 1": 1 - lam[0],
        "lambda_mid >= eps": float(mid.min() - epsilon),
        "lambda_mid <= 1": float(1 - mid.max()),
        "lambda_m >= eps": lam[-1] - epsilon,
        "lambda_m <= 1/eps": 1 / epsilon - lam[-1],
    }
    slack = {k: float(v) for k, v in slack.items()}
    return all(v >= -tol for v in slack.values()), slack
