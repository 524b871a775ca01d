"""Random smooth expressions for derivative cross-checks."""

import numpy as np

VARS = ("x", "y", "z")


def random_expression(rng: np.random.Generator, depth: int = 3) -> str:
    """Expression string that is smooth and of moderate frequency on
    ``[-1, 1]^3``."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return str(rng.choice(VARS))
        return f"{rng.uniform(0.2, 2.0):.3f}"
    a = random_expression(rng, depth - 1)
    b = random_expression(rng, depth - 1)
    k = int(rng.integers(0, 10))
    if k == 0:
        return f"({a} + {b})"
    if k == 1:
        return f"({a} - {b})"
    if k == 2:
        return f"({a} * {b})"
    if k == 3:
        return f"{a} / (2 + sin({b}))"
    if k == 4:
        return f"sin({a})"
    if k == 5:
        return f"cos({a})"
    if k == 6:
        return f"exp(sin({a}))"
    if k == 7:
        return f"log(1.5 + cos({a}))"
    if k == 8:
        return f"sqrt(1 + {a}^2)"
    # damped so nested powers stay low-frequency for the difference oracle
    return f"(0.5*{a})^{int(rng.integers(2, 4))}"
