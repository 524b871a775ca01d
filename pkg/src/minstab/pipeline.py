"""End-to-end analysis: pinching, minimality, ``F``, ``Q``, verdict.

The report is plain JSON with sorted keys. Wall-clock timings are only
recorded on request so that repeated runs give byte-identical output.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import AnalysisConfig, ConfigError
from .expr import ExpressionError
from .geometry import GeometryError, pinch_check
from .product import trace_matrices
from .stability import (
    F_split,
    certify,
    classify_A,
    pointwise_F,
    quadratic_form_Q,
    section_field,
    sphere_shape_matrix,
)

__all__ = ["SCHEMA_VERSION", "ReportFile", "AnalysisResult", "run_analysis", "exit_code_for"]

SCHEMA_VERSION = 1
CSV_FIELDS = ("F", "F1", "F2", "F3", "A_min_eig")


def _plain(obj):
    """Recursively turn numpy scalars and arrays into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


@dataclass
class ReportFile:
    config: dict
    pinch: dict | None
    stability: dict
    csv: str | None = None
    timings: dict | None = None
    schema_version: int = SCHEMA_VERSION
    version: str = __version__

    def to_dict(self) -> dict:
        return _plain(
            {
                "schema_version": self.schema_version,
                "version": self.version,
                "config": self.config,
                "pinch": self.pinch,
                "stability": self.stability,
                "csv": self.csv,
                "timings": self.timings,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=str) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportFile":
        d = json.loads(text)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        return cls(
            config=d["config"],
            pinch=d["pinch"],
            stability=d["stability"],
            csv=d.get("csv"),
            timings=d.get("timings"),
            schema_version=d["schema_version"],
            version=d.get("version", ""),
        )

    @property
    def verdict(self) -> str:
        return self.stability["verdict"]

    def write(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


@dataclass
class AnalysisResult:
    report: ReportFile
    exit_code: int
    stability: object = None  # StabilityReport
    node_table: dict = field(default_factory=dict)  # column -> (K,) array
    coordinates: tuple = ()

    def write_csv(self, path) -> None:
        cols = list(self.coordinates) + list(CSV_FIELDS)
        nodes = self.node_table["nodes"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for k in range(len(nodes)):
                row = list(nodes[k]) + [self.node_table[c][k] for c in CSV_FIELDS]
                w.writerow([repr(float(v)) for v in row])


def exit_code_for(verdict: str) -> int:
    return 3 if verdict in ("NOT_MINIMAL", "HYPOTHESIS_VIOLATED") else 0


def run_analysis(
    config: AnalysisConfig,
    timings: bool = False,
    csv_path: str | None = None,
) -> AnalysisResult:
    """Run the full pipeline on a validated configuration.

    Raises
    ------
    ConfigError
        For configuration or precondition failures (singular chart nodes,
        unparseable expressions). The CLI maps these to exit code 2.
    """
    clock = {}
    t0 = time.perf_counter()

    def lap(name):
        nonlocal t0
        t1 = time.perf_counter()
        clock[name] = t1 - t0
        t0 = t1

    try:
        m1_chart, m2, sigma = config.build()
        tol = config.tolerances
        mode = config.mode
        c = mode["sphere_curvature"]
        warnings = []

        pinch = None
        if m1_chart.m1 >= 3:
            pinch = pinch_check(
                m1_chart,
                grid=mode["pinch_resolution"],
                mode=mode["epsilon"],
                m=m1_chart.m1 + m2.dim,
                tol=tol["pinch"],
            )
        else:
            warnings.append("pinching threshold undefined for dim M1 < 3")
        lap("pinch")

        mesh = sigma.mesh(config.resolution)
        nodes = sigma.evaluate(mesh.nodes)
        lap("geometry")

        H = np.array([g.second.minimality_residual for g in nodes])
        eps = pinch.epsilon if pinch is not None else 1.0

        F = np.empty(len(nodes))
        parts = np.empty((len(nodes), 3))
        A_field, A_min = [], np.empty(len(nodes))
        off_sphere = 0.0
        for k, g in enumerate(nodes):
            if c > 0:
                W, off = sphere_shape_matrix(g.m1, c)
                off_sphere = max(off_sphere, off)
                F[k] = pointwise_F(g.frame, [W], sphere_curvature=c)
            else:
                F[k] = pointwise_F(g.frame, g.m1)
            ps = F_split(g.frame, g.m1, eps)
            parts[k] = ps.F1, ps.F2, ps.F3
            A = trace_matrices(g.frame).A
            A_field.append(A)
            A_min[k] = np.linalg.eigvalsh(A)[0]
        if c > 0 and off_sphere > 1e-8:
            warnings.append(f"M1 does not lie in the sphere of curvature {c} (offset {off_sphere:.3e})")
        integral_F = float(np.sum(mesh.weights * F))
        lap("F")

        Qs = []
        for U in np.eye(sigma.split):
            Qs.append(quadratic_form_Q(section_field(U, nodes), nodes, mesh))
        lap("Q")

        cls = classify_A(A_field, sigma.n, m1_chart.m1, tol["classification"])
        report = certify(
            integral_F,
            mesh.volume,
            float(H.max()),
            pinch,
            per_basis_Q=Qs,
            F_range=(float(F.min()), float(F.max())),
            F3_min=float(parts[:, 2].min()) if pinch is not None else 0.0,
            classification=cls,
            cert_tol=tol["certificate"],
            minimality_tol=1e-6 if tol["minimality"] is None else tol["minimality"],
        )
        report.warnings.extend(warnings)
        lap("certify")
    except (ExpressionError, GeometryError) as exc:
        raise ConfigError(f"precondition failed: {exc}") from exc

    stab = report.to_dict()
    stab.pop("pinch")
    stab["nodes"] = len(nodes)
    stab["F_split_max_residual"] = float(np.abs(F - parts.sum(axis=1)).max()) if c == 0 else None
    rf = ReportFile(
        config=config.echo(),
        pinch=None if pinch is None else pinch.to_dict(),
        stability=stab,
        csv=None if csv_path is None else str(csv_path),
        timings=clock if timings else None,
    )
    table = {
        "nodes": mesh.nodes,
        "F": F,
        "F1": parts[:, 0],
        "F2": parts[:, 1],
        "F3": parts[:, 2],
        "A_min_eig": A_min,
    }
    result = AnalysisResult(rf, exit_code_for(report.verdict), report, table, sigma.coordinates)
    if csv_path is not None:
        result.write_csv(csv_path)
    return result
