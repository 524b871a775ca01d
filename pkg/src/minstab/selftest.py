"""Seeded property suites over random frames and curvature data."""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .geometry import PinchHypothesisError, eigen_pinch_lemma
from .product import frame_identities_residual
from .sampling import random_frame, random_pinched_lambda, random_sample
from .stability import F_lower_bound, F_split, case2_bound, case2_coefficient, f_bound, relation_residual

__all__ = ["SuiteResult", "SUITES", "run_suite", "run_selftest", "format_results"]


@dataclass
class SuiteResult:
    name: str
    samples: int
    max_residual: float
    tolerance: float
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.max_residual <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name:<14} samples={self.samples:<6d} "
            f"max_residual={self.max_residual:.3e} tol={self.tolerance:.0e} failures={self.failures}"
        )


def _dims(rng, with_m2=True):
    m1 = int(rng.integers(3, 6))
    m2 = int(rng.integers(1, 4)) if with_m2 else 0
    n = int(rng.integers(1, m1 + m2))
    return m1, m2, n


def suite_lemma(rng, count):
    """Identities linking frame components to ``A``, ``B`` and ``m1``."""
    worst = 0.0
    for _ in range(count):
        frame, _, _ = random_frame(rng, *_dims(rng))
        worst = max(worst, max(frame_identities_residual(frame).values()))
    return worst, 0, 1e-10


def suite_relation(rng, count):
    worst = 0.0
    for _ in range(count):
        s = random_sample(rng, *_dims(rng))
        worst = max(worst, max(relation_residual(s.frame, s.fd).values()))
    return worst, 0, 1e-10


def suite_f_split(rng, count):
    """``F = F1 + F2 + F3`` and ``F3 >= 0`` under pinching."""
    worst, bad = 0.0, 0
    for _ in range(count):
        s = random_sample(rng, *_dims(rng))
        ps = F_split(s.frame, s.fd, s.epsilon)
        worst = max(worst, ps.identity_residual)
        bad += ps.F3 < -1e-12
    return worst, bad, 1e-9


def suite_f_values(rng, count):
    """Exact threshold values of ``f`` and the second-case coefficient."""
    worst = 0.0
    for m1 in range(3, 11):
        eps = (m1 - 1) ** -0.25
        worst = max(worst, abs(case2_coefficient(m1, eps)))
        for n in range(1, m1 + 1):
            worst = max(worst, abs(f_bound(-n, n, m1, eps)))
            worst = max(worst, abs(f_bound(n, n, m1, eps) - 4.0 * (m1 - n) / m1))
    return worst, 0, 1e-12


def suite_eigen_pinch(rng, count):
    bad = 0
    worst = 0.0
    for _ in range(count):
        m1 = int(rng.integers(3, 8))
        eps = float(rng.uniform(0.3, 1.0))
        lam = random_pinched_lambda(rng, m1, eps)
        try:
            holds, slack = eigen_pinch_lemma(lam, eps)
        except PinchHypothesisError:
            bad += 1
            continue
        bad += not holds
        worst = max(worst, max(-min(slack.values()), 0.0))
    return worst, bad, 1e-12


def suite_lower_bounds(rng, count):
    """``F`` against its pinched lower bounds in both dimension regimes."""
    bad = 0
    worst = 0.0
    for _ in range(count):
        m1, m2, n = _dims(rng)
        s = random_sample(rng, m1, m2, n)
        ps = F_split(s.frame, s.fd, s.epsilon)
        if n <= m1:
            gap = ps.F - F_lower_bound(ps.trA, n, m1, s.epsilon)
        else:
            gap = ps.F - case2_bound(ps.trA, n, m1, s.epsilon)
        bad += gap < -1e-9
        worst = max(worst, max(-gap, 0.0))
    return worst, bad, 1e-9


# every (m1, n) with 3 <= m1 <= 10 and 1 <= n <= m1
F_VALUE_CASES = sum(range(3, 11))

SUITES: dict = {
    "lemma": (suite_lemma, 1000),
    "relation": (suite_relation, 1000),
    "F-split": (suite_f_split, 1000),
    "f-values": (suite_f_values, None),  # fixed grid, no sampling
    "eigen-pinch": (suite_eigen_pinch, 2000),
    "lower-bounds": (suite_lower_bounds, 2000),
}


def run_suite(name: str, seed: int = 0, count: int | None = None) -> SuiteResult:
    fn, default = SUITES[name]
    if default is None:
        count = F_VALUE_CASES
    elif count is None:
        count = default
    # one stream per suite so suites can run alone and still agree
    rng = np.random.default_rng([seed, list(SUITES).index(name)])
    worst, bad, tol = fn(rng, count)
    return SuiteResult(name, count, float(worst), tol, int(bad))


def run_selftest(seed: int = 0, scale: float = 1.0) -> list:
    out = []
    for name, (_, default) in SUITES.items():
        count = None if default is None else max(1, int(round(default * scale)))
        out.append(run_suite(name, seed, count))
    return out


def format_results(results) -> str:
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append("selftest: " + ("all suites passed" if ok else "FAILED"))
    return "\n".join(lines) + "\n"
