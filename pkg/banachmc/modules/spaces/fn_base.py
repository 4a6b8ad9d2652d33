from __future__ import annotations

from collections.abc import Callable
from functools import lru_cache

import numpy as np
import numpy.typing as npt
from scipy.special import roots_jacobi, roots_legendre

from banachmc.exceptions import EvaluationError


def uniform_nodes_fn(n_cells: int) -> npt.NDArray[np.float64]:
    return np.arange(n_cells + 1, dtype=np.float64) / n_cells


def graded_nodes_fn(n_cells: int) -> npt.NDArray[np.float64]:
    return (np.arange(n_cells + 1, dtype=np.float64) / n_cells) ** 2


def evaluate_fn(
    f: Callable, x: npt.NDArray[np.float64], label: str = "node", offset: int = 0
) -> npt.NDArray[np.float64]:
    """Evaluate `f` on the points `x` and reject non-finite values.

    Vectorized callables are called once on the whole array, scalar callables
    fall back to a point-by-point loop. `offset` shifts the reported index.
    """
    try:
        values = np.asarray(f(x), dtype=np.float64)
    except (TypeError, ValueError):
        values = np.empty(0)
    if values.shape != x.shape:
        values = np.fromiter((f(xi) for xi in x.flat), dtype=np.float64, count=x.size)
        values = values.reshape(x.shape)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size > 0:
        index = tuple(int(i) for i in bad[0]) if values.ndim > 1 else int(bad[0][0]) + offset
        raise EvaluationError(f"non-finite value at {label} {index}", index=index)
    return values


@lru_cache(maxsize=256)
def _jacobi_rule(n: int, alpha: float, beta: float):
    if alpha == 0.0 and beta == 0.0:
        t, w = roots_legendre(n)
        return t, w
    t, w = roots_jacobi(n, alpha, beta)
    # divide the Jacobi weight out so the rule integrates |f|^p directly
    w_eff = w / ((1.0 - t) ** alpha * (1.0 + t) ** beta)
    return t, w_eff


def gauss_panel_fn(
    a: float, b: float, n: int, kappa_left: float = 0.0, kappa_right: float = 0.0
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Nodes and effective weights of an n-point rule on [a, b].

    A nonzero `kappa_left` (resp. `kappa_right`) places the Jacobi weight
    |x - a|^kappa (resp. |b - x|^kappa) at that end of the panel.
    """
    t, w = _jacobi_rule(n, float(kappa_right), float(kappa_left))
    half = 0.5 * (b - a)
    return a + half * (1.0 + t), half * w


def geometric_breakpoints_fn(depth: int) -> npt.NDArray[np.float64]:
    """Breakpoints 0, 2^-depth, ..., 1/2, 1."""
    inner = 2.0 ** -np.arange(depth, -1, -1, dtype=np.float64)
    return np.concatenate(([0.0], inner))


def thin_evenly_fn(points: npt.NDArray[np.float64], cap: int) -> npt.NDArray[np.float64]:
    if points.size <= cap:
        return points
    keep = np.linspace(0, points.size - 1, cap).round().astype(np.int64)
    return points[np.unique(keep)]


def conjugate_fn(p: float) -> float:
    if p == 1.0:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


def ceil_count_fn(x: float) -> int:
    """Ceiling that ignores relative round-off below 1e-12."""
    return max(1, int(np.ceil(x * (1.0 - 1e-12))))


def evaluate2_fn(
    f2: Callable,
    x: npt.NDArray[np.float64],
    y: npt.NDArray[np.float64],
    offset: tuple[int, int] = (0, 0),
) -> npt.NDArray[np.float64]:
    """Two-argument version of `evaluate_fn` on matching grids `x`, `y`."""
    try:
        values = np.asarray(f2(x, y), dtype=np.float64)
    except (TypeError, ValueError):
        values = np.empty(0)
    if values.shape != x.shape:
        values = np.fromiter(
            (f2(a, b) for a, b in zip(x.flat, y.flat)), dtype=np.float64, count=x.size
        ).reshape(x.shape)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size > 0:
        index = (int(bad[0][0]) + offset[0], int(bad[0][1]) + offset[1])
        raise EvaluationError(f"non-finite value at index {index}", index=index)
    return values
