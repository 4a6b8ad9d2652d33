from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import gamma as gamma_fn

from banachmc.modules.spaces.fn_base import ceil_count_fn, conjugate_fn


def conjugate(p: float) -> float:
    """Hölder conjugate p' with 1/p + 1/p' = 1."""
    if not p >= 1.0:
        raise ValueError(f"Hölder conjugate needs p >= 1, got {p}")
    return conjugate_fn(p)


@dataclass(frozen=True)
class SpaceSpec:
    """Type and integrability data of the state space driving the allocation.

    `a0`, `a1` and `C_tau` bound the growth of the type constants of the level
    spaces: N^-(a0 - a1 r') tau_r^r' <= C_tau.
    """

    p: float
    q: float
    q_tilde: float | None = None
    a0: float = 1.0
    a1: float = 0.0
    C_tau: float = 1.0

    def __post_init__(self):
        if not 1.0 <= self.p <= 2.0:
            raise ValueError(f"Rademacher type p must lie in [1, 2], got {self.p}")
        if not self.q > 1.0:
            raise ValueError(f"Integrability q must exceed 1, got {self.q}")
        if self.p > self.q:
            raise ValueError(f"Type p={self.p} must not exceed integrability q={self.q}")
        if self.q_tilde is None:
            object.__setattr__(self, "q_tilde", self.q)
        if self.q_tilde < self.q:
            raise ValueError(f"q_tilde={self.q_tilde} must be at least q={self.q}")
        if self.a0 < 0 or self.a1 < 0:
            raise ValueError("Growth exponents a0, a1 must be non-negative")
        if self.C_tau < 1.0:
            raise ValueError(f"C_tau must be >= 1, got {self.C_tau}")

    @property
    def q_bar(self) -> float:
        return min(self.q, 2.0)

    @property
    def q_hat(self) -> float:
        return min(self.q_tilde, 2.0)

    @property
    def p_conj(self) -> float:
        return conjugate_fn(self.p)

    @property
    def q_bar_conj(self) -> float:
        return conjugate_fn(self.q_bar)


def khintchine_B(q: float) -> float:
    if not q >= 1.0:
        raise ValueError(f"Khintchine constant needs q >= 1, got {q}")
    if q <= 2.0:
        return 1.0
    # Gaussian moment bound (E|Z|^q)^(1/q)
    return math.sqrt(2.0) * (gamma_fn((q + 1.0) / 2.0) / math.sqrt(math.pi)) ** (1.0 / q)


def kahane_K_q1(q: float) -> float:
    if not q >= 1.0:
        raise ValueError(f"Kahane-Khintchine constant needs q >= 1, got {q}")
    if q <= 2.0:
        return math.sqrt(2.0)
    return math.sqrt(2.0 * (q - 1.0))


def type_constant_lp_seq(s: float, N: int, r: float) -> float:
    """Type-r constant of the N-dimensional sequence space l^s (upper bound for s = inf)."""
    if not s >= 1.0:
        raise ValueError(f"s must lie in [1, inf], got {s}")
    if N < 1 or int(N) != N:
        raise ValueError(f"N must be a positive integer, got {N}")
    if not 1.0 <= r <= 2.0:
        raise ValueError(f"r must lie in [1, 2], got {r}")
    if math.isinf(s):
        if r == 1.0:
            return 1.0
        return max(2.0 * math.e * math.log(N), 2.0) ** (1.0 / conjugate_fn(r))
    p = min(s, 2.0)
    if r <= p:
        return khintchine_B(s)
    return float(N) ** (1.0 / p - 1.0 / r)


def f_alpha_ell(r: float, N: int, alpha: float, spec: SpaceSpec) -> float:
    """Upper bound C_tau N^(a0 + (alpha - a1) r') of [tau_r N^alpha]^r'."""
    if not 1.0 < r <= 2.0:
        raise ValueError(f"r must lie in (1, 2], got {r}")
    r_conj = conjugate_fn(r)
    return spec.C_tau * float(N) ** (spec.a0 + (alpha - spec.a1) * r_conj)


def lp_seq_space_spec(s: float, q: float) -> SpaceSpec:
    """Growth data of the l^s_N family, s finite."""
    if not 1.0 <= s < math.inf:
        raise ValueError(f"s must be finite and >= 1, got {s}")
    if s < 2.0:
        return SpaceSpec(p=min(s, q), q=q, a0=1.0, a1=1.0 / conjugate_fn(s), C_tau=1.0)
    return SpaceSpec(p=2.0, q=max(q, 2.0), a0=0.0, a1=0.0, C_tau=khintchine_B(s) ** 2)


def lp_seq_slmc_samples(N: int, alpha: float, s: float, q: float) -> int:
    """Single-level sample count for the l^s_N family, including s = inf."""
    q_bar_conj = conjugate_fn(min(q, 2.0))
    if math.isinf(s):
        factor = max(2.0 * math.e * math.log(N), 2.0)
        return ceil_count_fn(factor * float(N) ** (alpha * q_bar_conj))
    spec = lp_seq_space_spec(s, q)
    if s >= 2.0:
        return ceil_count_fn(spec.C_tau * float(N) ** (2.0 * alpha))
    r_conj = q_bar_conj if alpha >= spec.a1 else spec.p_conj
    return ceil_count_fn(float(N) ** (spec.a0 + r_conj * (alpha - spec.a1)))
