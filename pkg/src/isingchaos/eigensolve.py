"""Dense Hermitian eigensolver with residual checks and on-disk caching.

Spectra and eigenvectors are cached per (N, k, lam, alpha, format version)
as little-endian float64 payloads plus a JSON sidecar carrying exact-key
metadata and a checksum.  Writes are atomic (temp file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hamiltonian import ModelParams, SectorMatrix, hermiticity_defect

CACHE_VERSION = 1


class NonHermitianError(ValueError):
    """Input matrix fails the Hermiticity tolerance."""


class DiagonalizationError(RuntimeError):
    """Eigensolver failed to converge or verify."""


class CacheCorruptionError(RuntimeError):
    """Cache payload does not match its recorded checksum."""


@dataclass
class EigenDecomposition:
    """Full spectrum and gauge-fixed eigenvectors of one sector."""

    params: ModelParams
    k: int
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.size


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-modulus component of each eigenvector real-positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    lead = vectors[idx, np.arange(vectors.shape[1])]
    scale = np.abs(lead)
    scale[scale == 0] = 1.0
    return vectors * (lead.conj() / scale)


def diagonalize(
    matrix: SectorMatrix,
    hermiticity_tol: float = 1e-12,
    residual_factor: float = 1e-8,
) -> EigenDecomposition:
    """Diagonalize a sector matrix and verify the residuals.

    Raises ``NonHermitianError`` on bad input and ``DiagonalizationError``
    (with a matrix fingerprint) if LAPACK fails or residuals exceed
    ``residual_factor`` times the spectral norm.
    """
    h = np.asarray(matrix.entries)
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    defect = hermiticity_defect(h)
    if defect > hermiticity_tol * scale:
        raise NonHermitianError(f"hermiticity defect {defect:.3e} exceeds tolerance")
    h = 0.5 * (h + h.conj().T)

    fingerprint = hashlib.sha256(np.ascontiguousarray(h).tobytes()).hexdigest()[:16]
    try:
        if np.max(np.abs(h.imag)) == 0.0:
            energies, vectors = np.linalg.eigh(h.real)
            vectors = vectors.astype(np.complex128)
        else:
            energies, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise DiagonalizationError(f"eigensolver failed on matrix {fingerprint}") from exc

    vectors = _fix_phases(vectors)
    norm = max(float(np.max(np.abs(energies))), np.finfo(float).tiny)
    residual = h @ vectors - vectors * energies
    worst = float(np.max(np.linalg.norm(residual, axis=0)))
    if worst > residual_factor * norm:
        raise DiagonalizationError(
            f"residual {worst:.3e} exceeds {residual_factor:.1e} * |H| on matrix {fingerprint}"
        )
    return EigenDecomposition(
        params=matrix.params, k=matrix.k, energies=energies, vectors=vectors
    )


def _cache_stem(params: ModelParams, k: int) -> str:
    key = "|".join(
        [
            str(params.n_sites),
            str(k),
            float(params.lam).hex(),
            float(params.alpha).hex(),
            f"v{CACHE_VERSION}",
        ]
    )
    digest = hashlib.sha256(key.encode()).hexdigest()[:16]
    return f"N{params.n_sites}_k{k}_{digest}"


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def cache_store(decomp: EigenDecomposition, cache_dir) -> Path:
    """Persist a decomposition; returns the sidecar path."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    stem = _cache_stem(decomp.params, decomp.k)

    energies = np.ascontiguousarray(decomp.energies, dtype="<f8")
    dim = energies.size
    interleaved = np.empty((dim, dim, 2), dtype="<f8")
    interleaved[..., 0] = decomp.vectors.real
    interleaved[..., 1] = decomp.vectors.imag
    payload = energies.tobytes() + interleaved.tobytes()

    meta = {
        "version": CACHE_VERSION,
        "n_sites": decomp.params.n_sites,
        "k": decomp.k,
        "lam": decomp.params.lam,
        "alpha": decomp.params.alpha,
        "lam_hex": float(decomp.params.lam).hex(),
        "alpha_hex": float(decomp.params.alpha).hex(),
        "dim": dim,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    _atomic_write(cache_dir / f"{stem}.bin", payload)
    _atomic_write(
        cache_dir / f"{stem}.json", json.dumps(meta, sort_keys=True).encode()
    )
    return cache_dir / f"{stem}.json"


def cache_load(params: ModelParams, k: int, cache_dir) -> EigenDecomposition | None:
    """Load a cached decomposition; None signals a miss (recompute)."""
    cache_dir = Path(cache_dir)
    stem = _cache_stem(params, k)
    meta_path = cache_dir / f"{stem}.json"
    bin_path = cache_dir / f"{stem}.bin"
    if not meta_path.exists() or not bin_path.exists():
        return None
    meta = json.loads(meta_path.read_text())
    if meta.get("version") != CACHE_VERSION:
        return None
    if (
        meta.get("lam_hex") != float(params.lam).hex()
        or meta.get("alpha_hex") != float(params.alpha).hex()
        or meta.get("n_sites") != params.n_sites
        or meta.get("k") != k
    ):
        return None
    payload = bin_path.read_bytes()
    if hashlib.sha256(payload).hexdigest() != meta["payload_sha256"]:
        raise CacheCorruptionError(f"checksum mismatch for {bin_path}")
    dim = meta["dim"]
    expected = 8 * dim + 16 * dim * dim
    if len(payload) != expected:
        raise CacheCorruptionError(f"payload size mismatch for {bin_path}")
    energies = np.frombuffer(payload[: 8 * dim], dtype="<f8").copy()
    flat = np.frombuffer(payload[8 * dim :], dtype="<f8").reshape(dim, dim, 2)
    vectors = flat[..., 0] + 1j * flat[..., 1]
    return EigenDecomposition(params=params, k=k, energies=energies, vectors=vectors)


def diagonalize_cached(
    matrix_builder, params: ModelParams, k: int, cache_dir=None
) -> tuple[EigenDecomposition, bool]:
    """Load from cache or diagonalize-and-store; returns (decomp, was_hit)."""
    if cache_dir is not None:
        hit = cache_load(params, k, cache_dir)
        if hit is not None:
            return hit, True
    decomp = diagonalize(matrix_builder())
    if cache_dir is not None:
        cache_store(decomp, cache_dir)
    return decomp, False
