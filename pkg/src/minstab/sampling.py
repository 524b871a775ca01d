"""Random frames and curvature data for the identity and inequality suites.

``M1`` and ``M2`` are round spheres through a random point; ``Sigma`` is a
random ``n``-plane of ``TM``. The shape operator of ``M1`` is replaced by a
random symmetric one with prescribed principal curvatures, since the
pointwise identities only see the algebra at one point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import FundamentalData
from .product import AdaptedFrame, adapted_frame, tm_basis

__all__ = [
    "FrameSample",
    "random_unit",
    "random_orthonormal",
    "random_sphere_tangent",
    "random_frame",
    "random_pinched_lambda",
    "random_principal_data",
    "random_sample",
]


@dataclass
class FrameSample:
    frame: AdaptedFrame
    fd: FundamentalData
    epsilon: float


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_orthonormal(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    return Q * np.sign(np.diag(R))


def random_sphere_tangent(rng: np.random.Generator, m: int) -> tuple:
    """Random point ``x`` on the unit ``S^m`` and an orthonormal basis
    ``(m + 1, m)`` of its tangent space."""
    x = random_unit(rng, m + 1)
    Q, _ = np.linalg.qr(np.column_stack([x, rng.standard_normal((m + 1, m))]))
    return x, Q[:, 1:]


def random_frame(rng: np.random.Generator, m1: int, m2: int, n: int) -> tuple:
    """Adapted frame of a random ``n``-plane in ``T(S^m1 x S^m2)``.

    Returns the frame together with the unit normal of ``S^m1`` and the
    tangent basis of ``S^m1``.
    """
    if not 1 <= n < m1 + m2:
        raise ValueError("need 1 <= n < m1 + m2")
    x1, T1 = random_sphere_tangent(rng, m1)
    if m2:
        _, T2 = random_sphere_tangent(rng, m2)
    else:
        T2 = np.zeros((0, 0))
    tm = tm_basis(T1, T2)
    coeffs = rng.standard_normal((n, m1 + m2))
    frame = adapted_frame(coeffs @ tm.T, tm, m1 + 1, m1)
    return frame, x1, T1


def random_pinched_lambda(
    rng: np.random.Generator, m1: int, epsilon: float, size: int | None = None
) -> np.ndarray:
    """Sorted principal curvatures with ``eps^2 <= lam_r lam_s <= 1``.

    Rejection sampling from the log-uniform law on ``[eps^2, 1/eps]``,
    which contains every admissible tuple.
    """
    e2 = epsilon * epsilon
    count = 1 if size is None else size
    if epsilon >= 1.0:
        out = np.ones((count, m1))
        return out[0] if size is None else out
    out = np.empty((0, m1))
    lo, hi = np.log(e2), -np.log(epsilon)
    while len(out) < count:
        lam = np.sort(np.exp(rng.uniform(lo, hi, size=(4 * count + 16, m1))), axis=1)
        prods_lo = lam[:, 0] * lam[:, 1]
        prods_hi = lam[:, -1] * lam[:, -2]
        ok = (prods_lo >= e2) & (prods_hi <= 1.0)
        out = np.concatenate([out, lam[ok]])
    out = out[:count]
    return out[0] if size is None else out


def random_principal_data(rng, nu, T1, lam) -> FundamentalData:
    """Shape data with curvatures ``lam`` along a random rotation of the
    tangent basis ``T1``."""
    dirs = T1 @ random_orthonormal(rng, T1.shape[1])
    return FundamentalData.from_principal(nu, dirs, lam)


def random_sample(
    rng: np.random.Generator, m1: int, m2: int, n: int, epsilon: float | None = None
) -> FrameSample:
    """Random frame plus pinched shape data; ``epsilon`` defaults to the
    threshold ``eps^2 = 1/sqrt(m1 - 1)``."""
    eps = (m1 - 1) ** -0.25 if epsilon is None else float(epsilon)
    frame, x1, T1 = random_frame(rng, m1, m2, n)
    lam = random_pinched_lambda(rng, m1, eps)
    # inward normal, as for the unit sphere
    return FrameSample(frame, random_principal_data(rng, -x1, T1, lam), eps)
