"""Moments and cumulants of the chain Hamiltonian in product states.

Closed forms for the first four moments of H in a configuration with n spins
up, parameterized by the number k of domain-wall pairs (anti-aligned
neighbour pairs / 2).  A brute-force path computes <s|H^j|s> exactly on small
chains by repeated sparse application and serves as the oracle for the
analytic formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hamiltonian import FULL_BASIS_MAX_SITES, ModelParams, build_full_hamiltonian
from .spin_basis import ChainSizeError, rotate_left


class FormulaRangeError(ValueError):
    """Analytic moment formulas requested below their validity range."""


@dataclass(frozen=True)
class LocalMomentSet:
    """First four moments/cumulants of H in configurations with n spins up."""

    n_up: int
    e_n: float
    sigma2: float
    mu3: float
    mu4: float
    k3: float
    k4: float
    k_walls: float

    @property
    def mu1(self) -> float:
        return self.e_n

    @property
    def mu2(self) -> float:
        return self.sigma2 + self.e_n**2

    @classmethod
    def from_cumulants(
        cls, n_up: int, e_n: float, sigma2: float, k3: float, k4: float, k_walls: float = 0.0
    ) -> "LocalMomentSet":
        mu1 = e_n
        mu2 = sigma2 + mu1**2
        mu3 = k3 + 3 * mu2 * mu1 - 2 * mu1**3
        mu4 = k4 + 4 * mu3 * mu1 + 3 * mu2**2 - 12 * mu2 * mu1**2 + 6 * mu1**4
        return cls(
            n_up=n_up, e_n=e_n, sigma2=sigma2, mu3=mu3, mu4=mu4, k3=k3, k4=k4, k_walls=k_walls
        )


def domain_wall_count(config: int, n_sites: int) -> int:
    """Number of domain-wall pairs: anti-aligned neighbour pairs on the ring / 2."""
    walls = (config ^ rotate_left(config, n_sites)).bit_count()
    assert walls % 2 == 0
    return walls // 2


def mean_domain_wall_count(n_sites: int, n_up: int) -> Fraction:
    """Average of ``domain_wall_count`` over all C(N, n) configurations."""
    return Fraction(n_up * (n_sites - n_up), n_sites - 1)


def cumulants_from_raw(mu1: float, mu2: float, mu3: float, mu4: float) -> tuple[float, float]:
    """Third and fourth cumulants from raw moments."""
    k3 = mu3 - 3 * mu2 * mu1 + 2 * mu1**3
    k4 = mu4 - 4 * mu3 * mu1 - 3 * mu2**2 + 12 * mu2 * mu1**2 - 6 * mu1**4
    return k3, k4


def analytic_moments(
    params: ModelParams, n_up: int, k_walls: float | None = None
) -> LocalMomentSet:
    """Closed-form moment set; ``k_walls=None`` substitutes the mean value.

    The third-moment formula needs N >= 4 and the fourth N >= 5, so shorter
    chains are rejected.
    """
    n, lam, alpha = params.n_sites, params.lam, params.alpha
    if n < 5:
        raise FormulaRangeError("fourth-moment formula requires N >= 5 (third: N >= 4)")
    if not 0 <= n_up <= n:
        raise ValueError("up-spin count outside [0, N]")
    if k_walls is None:
        k_walls = float(mean_domain_wall_count(n, n_up))
    a2 = alpha**2
    e = lam * (n - 2 * n_up)
    sigma2 = n * (1 + a2)
    mu3 = e**3 + (3 * (1 + a2) * n - 4 - 2 * a2) * e - 6 * n * a2
    k3 = -6 * n * a2 - 2 * e * (a2 + 2)
    tail = n * (24 * a2 - 2 - 2 * a2**2 + 16 * lam**2 + 4 * lam**2 * a2)
    mu4 = (
        e**4
        + e**2 * (6 * n * (1 + a2) - 16 - 8 * a2)
        + 8 * e * (4 - 3 * n) * a2
        + 3 * n**2 * (1 + a2) ** 2
        - 32 * k_walls * lam**2
        + tail
    )
    k4 = 32 * a2 * e - 32 * k_walls * lam**2 + tail
    return LocalMomentSet(
        n_up=n_up, e_n=e, sigma2=sigma2, mu3=mu3, mu4=mu4, k3=k3, k4=k4, k_walls=k_walls
    )


def bruteforce_state_moments(
    config: int, params: ModelParams, order: int = 4
) -> np.ndarray:
    """<s|H^j|s> for j = 1..order by repeated sparse application (N <= 12)."""
    if params.n_sites > 12:
        raise ChainSizeError("brute-force moments capped at N=12")
    if not 1 <= order <= 6:
        raise ValueError("order must be in [1, 6]")
    h = build_full_hamiltonian(params)
    v = np.zeros(1 << params.n_sites)
    v[config] = 1.0
    out = np.empty(order)
    w = v
    for j in range(order):
        w = h @ w
        out[j] = v @ w
    return out


def all_state_moments(params: ModelParams, order: int = 4) -> np.ndarray:
    """<s|H^j|s> for every configuration at once via dense matrix powers.

    Returns an array of shape (order, 2^N).  Dense powers keep this fast for
    the oracle sweeps; capped well below the sparse path's limit.
    """
    if params.n_sites > min(FULL_BASIS_MAX_SITES, 11):
        raise ChainSizeError("dense moment sweep capped at N=11")
    h = build_full_hamiltonian(params).toarray()
    out = np.empty((order, h.shape[0]))
    power = np.eye(h.shape[0])
    for j in range(order):
        power = power @ h
        out[j] = np.diag(power)
    return out
