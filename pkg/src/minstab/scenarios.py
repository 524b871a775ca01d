"""Built-in analysis configurations."""

from __future__ import annotations

from .config import AnalysisConfig

__all__ = ["SCENARIOS", "scenario", "scenario_text", "great_sphere_toml"]

# Hopf-type chart of the unit 3-sphere; regular for 0 < e < pi/2.
_S3_HOPF = """
[m1]
family = "custom"
coordinates = ["e", "s", "t"]
components = ["cos(e)*cos(s)", "cos(e)*sin(s)", "sin(e)*cos(t)", "sin(e)*sin(t)"]
domain = [[0.0, "pi/2"], [0.0, "2*pi", true], [0.0, "2*pi", true]]
"""


def great_sphere_toml(m: int, n: int, resolution: int = 16) -> str:
    """Totally geodesic ``S^n`` in the unit ``S^m`` through the standard
    sphere chart: polar angles ``t1..t_{n-1}``, azimuth ``ph``."""
    if not 1 <= n < m:
        raise ValueError("need 1 <= n < m")
    coords = [f"t{k}" for k in range(1, n)] + ["ph"]
    m1_map = coords[:-1] + ["pi/2"] * (m - n) + ["ph"]
    domain = ", ".join(['[0.0, "pi"]'] * (n - 1) + ['[0.0, "2*pi", true]'])
    res = [resolution] * (n - 1) + [2 * resolution]
    q = lambda xs: ", ".join(f'"{x}"' for x in xs)  # noqa: E731
    return f"""
name = "great-sphere-{m}-{n}"

[m1]
family = "sphere"
dim = {m}

[m2]
kind = "point"

[sigma]
coordinates = [{q(coords)}]
m1_map = [{q(m1_map)}]
m2_map = []
domain = [{domain}]
resolution = {res}

[mode]
epsilon = "theorem"
"""


SCENARIOS = {
    "great-sphere": great_sphere_toml(3, 2),
    "clifford-torus": """
name = "clifford-torus"
""" + _S3_HOPF + """
[m2]
kind = "point"

[sigma]
coordinates = ["a", "b"]
m1_map = ["pi/4", "a", "b"]
domain = [[0.0, "2*pi", true], [0.0, "2*pi", true]]
resolution = [24, 24]

[mode]
epsilon = "theorem"
""",
    "slice-m1": """
name = "slice-m1"

[m1]
family = "sphere"
dim = 3

[m2]
kind = "flat_torus"

[sigma]
coordinates = ["u1", "u2", "u3"]
m1_map = ["u1", "u2", "u3"]
m2_map = ["0.3", "1.1"]
domain = [[0.0, "pi"], [0.0, "pi"], [0.0, "2*pi", true]]
resolution = [12, 12, 24]
""",
    "slice-m2": """
name = "slice-m2"

[m1]
family = "sphere"
dim = 3

[m2]
kind = "flat_torus"

[sigma]
coordinates = ["a", "b"]
m1_map = ["1.0", "pi/2", "0.4"]
m2_map = ["a", "b"]
domain = [[0.0, "2*pi", true], [0.0, "2*pi", true]]
resolution = [16, 16]
""",
    "product-geodesic": """
name = "product-geodesic"

[m1]
family = "sphere"
dim = 3

[m2]
kind = "flat_torus"

[sigma]
coordinates = ["u1", "u2", "u3", "a"]
m1_map = ["u1", "u2", "u3"]
m2_map = ["a", "0.7"]
domain = [[0.0, "pi"], [0.0, "pi"], [0.0, "2*pi", true], [0.0, "2*pi", true]]
resolution = [8, 8, 16, 8]
""",
    "ellipsoid-family": """
name = "ellipsoid-family"

[m1]
family = "ellipsoid"
axes = [0.95, 1.0, 1.0, 1.0]
scale = 1.09

[m2]
kind = "point"

# the slice x4 = 0 is fixed by a reflection, hence totally geodesic
[sigma]
coordinates = ["v", "w"]
m1_map = ["pi/2", "v", "w"]
domain = [[0.0, "pi"], [0.0, "2*pi", true]]
resolution = [16, 32]

[mode]
epsilon = "theorem"
pinch_resolution = 16
""",
    "equator-circle": """
name = "equator-circle"

[m1]
family = "sphere"
dim = 2

[sigma]
coordinates = ["t"]
m1_map = ["pi/2", "t"]
domain = [[0.0, "2*pi", true]]
resolution = 64
""",
    "latitude-circle": """
name = "latitude-circle"

[m1]
family = "sphere"
dim = 2

# z = cos(pi/3) = 0.5
[sigma]
coordinates = ["t"]
m1_map = ["pi/3", "t"]
domain = [[0.0, "2*pi", true]]
resolution = 64
""",
}


def scenario_text(name: str) -> str:
    try:
        return SCENARIOS[name].lstrip()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


def scenario(name: str) -> AnalysisConfig:
    return AnalysisConfig.from_toml(scenario_text(name))
