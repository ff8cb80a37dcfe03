"""Ising chain in transverse and longitudinal fields, periodic boundaries.

H = -sum_j sx_j sx_{j+1} - lam * sum_j sz_j - alpha * sum_j sx_j,  site N+1 = 1.

Two assembly paths: a sparse matrix over the full product basis (small chains,
used as an oracle) and dense complex matrices in fixed translation-momentum
sectors (production path).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .spin_basis import ChainSizeError, MomentumBasis

FULL_BASIS_MAX_SITES = 14
SECTOR_MAX_SITES = 20


@dataclass(frozen=True)
class ModelParams:
    """Chain length and the two field strengths."""

    n_sites: int
    lam: float
    alpha: float

    def __post_init__(self):
        if self.n_sites < 2:
            raise ChainSizeError("need at least 2 sites")
        if not (np.isfinite(self.lam) and np.isfinite(self.alpha)):
            raise ValueError("fields must be finite")


def diagonal_energy(params: ModelParams, n_up) -> np.ndarray | float:
    """Diagonal matrix element for a configuration with ``n_up`` spins up."""
    return params.lam * (params.n_sites - 2 * np.asarray(n_up, dtype=float))


def _popcount(states: np.ndarray, n_sites: int) -> np.ndarray:
    counts = np.zeros_like(states)
    for i in range(n_sites):
        counts += (states >> i) & 1
    return counts


def build_full_hamiltonian(params: ModelParams) -> sparse.csr_matrix:
    """Sparse real-symmetric Hamiltonian over all 2^N configurations."""
    n = params.n_sites
    if n > FULL_BASIS_MAX_SITES:
        raise ChainSizeError(
            f"full-basis assembly capped at N={FULL_BASIS_MAX_SITES} (got {n})"
        )
    size = 1 << n
    states = np.arange(size, dtype=np.int64)
    diag = diagonal_energy(params, _popcount(states, n))

    rows = [states]
    cols = [states]
    data = [diag]
    for j in range(n):
        bond = (1 << j) | (1 << ((j + 1) % n))
        rows.append(states ^ bond)
        cols.append(states)
        data.append(np.full(size, -1.0))
    for j in range(n):
        rows.append(states ^ (1 << j))
        cols.append(states)
        data.append(np.full(size, -params.alpha))
    mat = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )
    return mat.tocsr()


@dataclass
class SectorMatrix:
    """Dense Hamiltonian block at fixed translation momentum."""

    params: ModelParams
    k: int
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def hermiticity_defect(matrix: np.ndarray) -> float:
    """Largest absolute deviation from H = H^dagger."""
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def build_sector_hamiltonian(basis: MomentumBasis, params: ModelParams) -> SectorMatrix:
    """Assemble the momentum-sector Hamiltonian in the given orbit basis.

    Each term maps a representative onto some configuration b; the matrix
    element picks up sqrt(t_a / t_b) times the plane-wave phase of the shift
    locating b inside its own orbit.
    """
    n = params.n_sites
    if basis.n_sites != n:
        raise ValueError("basis and params disagree on the chain length")
    if n > SECTOR_MAX_SITES:
        raise ChainSizeError(f"sector assembly capped at N={SECTOR_MAX_SITES} (got {n})")

    dim = basis.dim
    reps = np.array([st.orbit.representative for st in basis.states], dtype=np.int64)
    periods = np.array([st.orbit.period for st in basis.states], dtype=np.float64)
    rep_index, shift = basis.config_lookup()

    h = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim)
    h[cols, cols] = diagonal_energy(params, _popcount(reps, n))

    # k = 0 and k = N/2 give exactly real matrices; keep the phases exact so
    # downstream code can dispatch on a strictly real sector
    if basis.k == 0:
        phases = np.ones(n, dtype=np.complex128)
    elif 2 * basis.k == n:
        phases = ((-1.0) ** np.arange(n)).astype(np.complex128)
    else:
        phases = np.exp(2j * np.pi * basis.k * np.arange(n) / n)
    flips = [((1 << j) | (1 << ((j + 1) % n)), -1.0) for j in range(n)]
    flips += [(1 << j, -params.alpha) for j in range(n)]
    for mask, coeff in flips:
        targets = reps ^ mask
        rows = rep_index[targets]
        valid = rows >= 0
        r, c = rows[valid], cols[valid]
        vals = (
            coeff
            * np.sqrt(periods[c] / periods[r])
            * phases[shift[targets[valid]] % n]
        )
        np.add.at(h, (r, c), vals)
    return SectorMatrix(params=params, k=basis.k, entries=h)
