from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
from loguru import logger

from banachmc.common_values import DualBasis
from banachmc.exceptions import ProblemSizeError
from banachmc.modules.spaces import Partition, PiecewiseLinearFn
from banachmc.modules.spaces.fn_base import conjugate_fn

MAX_BRUTEFORCE_DIM = 6


@dataclass(frozen=True, eq=False)
class DualDiscretization:
    """Discrete dual ball {l : ||D l||_{p'} <= 1} paired with S1_0 through H."""

    H: npt.NDArray[np.float64] = field(repr=False)
    D: npt.NDArray[np.float64] = field(repr=False)
    p: float = 2.0
    partition: Partition | None = None
    basis: DualBasis = DualBasis.NODAL

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=np.float64))
        D = np.asarray(self.D, dtype=np.float64).ravel()
        if not 1.0 < self.p < np.inf:
            raise ValueError(f"Dual exponent p must lie in (1, inf), got {self.p}")
        if D.size != H.shape[0]:
            raise ValueError(f"D has {D.size} entries but H has {H.shape[0]} rows")
        if np.any(D <= 0):
            raise ValueError("D must be strictly positive")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "D", D)

    @property
    def p_conj(self) -> float:
        return conjugate_fn(self.p)

    @property
    def dual_dim(self) -> int:
        return self.H.shape[0]

    @property
    def primal_dim(self) -> int:
        return self.H.shape[1]


class BallMaximizer(NamedTuple):
    l_star: npt.NDArray[np.float64]
    value: float
    degenerate: bool


@dataclass(frozen=True, eq=False)
class InjectiveNormResult:
    value: float
    iterations: int
    maximizer_pair: tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]] = field(
        repr=False
    )
    converged: bool
    restarts_used: int = 0
    degenerate: bool = False
    objective_history: tuple[float, ...] = field(default=(), repr=False)


def assemble_dual(
    partition: Partition, p: float, basis: DualBasis | str = DualBasis.NODAL
) -> DualDiscretization:
    """H and D for the hat-function dual (trapezoid weights) or the cellwise dual.

    The cellwise dual pairs each cell indicator with the S1_0 derivative, its
    ball is the exact L^{p'} ball of piecewise constants.
    """
    if not 1.0 < p < np.inf:
        raise ValueError(f"Dual exponent p must lie in (1, inf), got {p}")
    basis = DualBasis(basis)
    p_conj = conjugate_fn(p)
    n_cells = partition.n_cells
    widths = partition.widths
    if basis == DualBasis.NODAL:
        H = 0.5 * (np.eye(n_cells + 1, k=1) - np.eye(n_cells + 1, k=-1))
        H[0, 0] = -0.5
        H[-1, -1] = 0.5
        weights = np.zeros(n_cells + 1)
        weights[:-1] += 0.5 * widths
        weights[1:] += 0.5 * widths
    else:
        H = np.eye(n_cells, n_cells + 1, k=1) - np.eye(n_cells, n_cells + 1)
        weights = widths
    return DualDiscretization(H, weights ** (1.0 / p_conj), p, partition, basis)


def weighted_norm(vec: npt.NDArray[np.float64], D: npt.NDArray[np.float64], p_conj: float) -> float:
    """||D l||_{l^{p'}}"""
    scaled = np.abs(D * vec)
    scale = float(np.max(scaled, initial=0.0))
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((scaled / scale) ** p_conj)) ** (1.0 / p_conj)


def linear_max_on_ball(c: npt.ArrayLike, D: npt.ArrayLike, p: float) -> BallMaximizer:
    """Closed-form maximizer of l^T c over ||D l||_{p'} <= 1."""
    if not 1.0 < p < np.inf:
        raise ValueError(f"Exponent p must lie in (1, inf), got {p}")
    c = np.asarray(c, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    scale = float(np.max(np.abs(c), initial=0.0))
    if scale == 0.0:
        return BallMaximizer(np.zeros_like(c), 0.0, True)
    ratio = np.abs(c / scale) / D
    total = float(np.sum(ratio**p))
    l_star = np.sign(c) * ratio ** (p - 1.0) / D / total ** (1.0 - 1.0 / p)
    return BallMaximizer(l_star, scale * total ** (1.0 / p), False)


def discrete_crossnorm(u: PiecewiseLinearFn, dual: DualDiscretization) -> float:
    """Value of the discrete dual norm of u, whose square is the norm of u (x) u."""
    return linear_max_on_ball(dual.H @ u.nodal_values, dual.D, dual.p).value


def _normalize(vec: npt.ArrayLike, dual: DualDiscretization) -> npt.NDArray[np.float64]:
    vec = np.asarray(vec, dtype=np.float64).ravel()
    if vec.size != dual.dual_dim:
        raise ValueError(f"Starting vector has {vec.size} entries, expected {dual.dual_dim}")
    norm = weighted_norm(vec, dual.D, dual.p_conj)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("Starting vectors must be nonzero and finite")
    return vec / norm


def _check_tensor(U: npt.ArrayLike, dual: DualDiscretization) -> npt.NDArray[np.float64]:
    U = np.asarray(U, dtype=np.float64)
    n = dual.primal_dim
    if U.shape != (n, n):
        raise ValueError(f"Tensor of shape {U.shape} does not match the dual (needs {n}x{n})")
    return U


def objective_settled(change: float, value: float, tol: float) -> bool:
    """Absolute test below an objective of 1, relative test above it."""
    return change <= tol * max(value, 1.0)


def _alternate(
    G: npt.NDArray[np.float64],
    dual: DualDiscretization,
    l1: npt.NDArray[np.float64],
    l2: npt.NDArray[np.float64],
    max_it: int,
    tol: float,
) -> InjectiveNormResult:
    f_prev = abs(float(l1 @ G @ l2))
    history = [f_prev]
    converged = False
    iterations = 0
    for iterations in range(1, max_it + 1):
        first = linear_max_on_ball(G @ l2, dual.D, dual.p)
        if first.degenerate:
            return InjectiveNormResult(
                0.0, iterations, (l1, l2), False, degenerate=True, objective_history=tuple(history)
            )
        l1 = first.l_star
        second = linear_max_on_ball(G.T @ l1, dual.D, dual.p)
        if second.degenerate:
            return InjectiveNormResult(
                0.0, iterations, (l1, l2), False, degenerate=True, objective_history=tuple(history)
            )
        l2 = second.l_star
        f_new = second.value
        history.append(f_new)
        change = abs(f_new - f_prev)
        f_prev = f_new
        if objective_settled(change, f_new, tol):
            converged = True
            break
    return InjectiveNormResult(
        f_prev, iterations, (l1, l2), converged, objective_history=tuple(history)
    )


def injective_norm_alternating(
    U: npt.ArrayLike,
    dual: DualDiscretization,
    l1_0: npt.ArrayLike,
    l2_0: npt.ArrayLike,
    max_it: int = 200,
    tol: float = 1e-10,
) -> InjectiveNormResult:
    """Alternating ascent on |l1^T H U H^T l2| over two dual balls.

    Each half-step maximizes the bilinear form exactly in one block, so the
    objective history is non-decreasing.

    Args:
        U: Coefficient matrix of the tensor in the primal basis.
        dual: Discrete dual ball and pairing matrix.
        l1_0: First starting vector, rescaled onto the dual sphere.
        l2_0: Second starting vector, rescaled onto the dual sphere.
        max_it: Maximum number of alternating sweeps.
        tol: Stopping tolerance on the objective change, relative once the
            objective exceeds 1.

    Returns:
        InjectiveNormResult: Best objective found and the maximizing pair.
    """
    if max_it < 1 or tol <= 0:
        raise ValueError("max_it must be >= 1 and tol > 0")
    U = _check_tensor(U, dual)
    G = dual.H @ U @ dual.H.T
    return _alternate(G, dual, _normalize(l1_0, dual), _normalize(l2_0, dual), max_it, tol)


def canonical_start(G: npt.NDArray[np.float64]) -> tuple[npt.NDArray, npt.NDArray]:
    if not np.any(G):
        ones = np.ones(G.shape[0])
        return ones, ones
    i, j = np.unravel_index(np.argmax(np.abs(G)), G.shape)
    return G[:, j].copy(), G[i, :].copy()


def injective_norm_multistart(
    U: npt.ArrayLike,
    dual: DualDiscretization,
    restarts: int = 8,
    max_it: int = 200,
    tol: float = 1e-10,
    seed: int = 0,
    workers: int = 1,
) -> InjectiveNormResult:
    if restarts < 0:
        raise ValueError(f"restarts must be >= 0, got {restarts}")
    if max_it < 1 or tol <= 0:
        raise ValueError("max_it must be >= 1 and tol > 0")
    U = _check_tensor(U, dual)
    G = dual.H @ U @ dual.H.T
    rng = np.random.default_rng(seed)
    starts = [canonical_start(G)]
    starts += [
        (rng.standard_normal(dual.dual_dim), rng.standard_normal(dual.dual_dim))
        for _ in range(restarts)
    ]

    def run(start):
        return _alternate(
            G, dual, _normalize(start[0], dual), _normalize(start[1], dual), max_it, tol
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, starts))
    else:
        results = [run(start) for start in starts]

    best = results[0]
    for result in results[1:]:
        if result.value > best.value:
            best = result
    logger.debug(
        f"Injective norm {best.value:.6e} after {best.iterations} iterations "
        f"({restarts} restarts)"
    )
    return InjectiveNormResult(
        best.value,
        best.iterations,
        best.maximizer_pair,
        best.converged,
        restarts,
        best.degenerate,
        best.objective_history,
    )


def injective_norm_bruteforce(
    U: npt.ArrayLike,
    dual: DualDiscretization,
    angular_resolution: int = 4096,
    seed: int = 0,
    refine: int = 16,
) -> float:
    """Validation oracle: dense sampling of the first dual sphere.

    For a fixed l1 the best l2 is explicit, so only the first sphere is
    sampled (random directions plus the {-1, 0, 1} grid); the best candidates
    are then polished by alternating steps.
    """
    m = dual.dual_dim
    if m > MAX_BRUTEFORCE_DIM:
        raise ProblemSizeError(
            f"Brute force is limited to dual dimension {MAX_BRUTEFORCE_DIM}, got {m}"
        )
    U = _check_tensor(U, dual)
    G = dual.H @ U @ dual.H.T
    if not np.any(G):
        return 0.0

    rng = np.random.default_rng(seed)
    grid = np.array(
        [v for v in itertools.product((-1.0, 0.0, 1.0), repeat=m) if any(v)]
    )
    candidates = np.vstack((grid, rng.standard_normal((angular_resolution, m))))
    scaled = np.abs(candidates * dual.D) ** dual.p_conj
    candidates /= (scaled.sum(axis=1) ** (1.0 / dual.p_conj))[:, None]

    # row k holds G^T l1 for candidate k
    images = candidates @ G
    values = np.sum((np.abs(images) / dual.D) ** dual.p, axis=1) ** (1.0 / dual.p)
    best = float(values.max())
    for k in np.argsort(values)[::-1][:refine]:
        l2 = linear_max_on_ball(images[k], dual.D, dual.p).l_star
        result = _alternate(G, dual, candidates[k], l2, 500, 1e-14)
        best = max(best, result.value)
    return best
