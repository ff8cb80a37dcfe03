"""Eigensolver contracts and cache round-trips."""

import numpy as np
import pytest

from isingchaos.eigensolve import (
    CacheCorruptionError,
    NonHermitianError,
    cache_load,
    cache_store,
    diagonalize,
    diagonalize_cached,
)
from isingchaos.hamiltonian import ModelParams, SectorMatrix, build_full_hamiltonian, build_sector_hamiltonian
from isingchaos.spin_basis import momentum_basis

PARAMS = ModelParams(6, 1.0, 1.0)


def as_sector(matrix, params=PARAMS, k=0):
    return SectorMatrix(params=params, k=k, entries=np.asarray(matrix, dtype=np.complex128))


def test_two_by_two_closed_form():
    a, b = 0.7, 0.4 - 0.3j
    decomp = diagonalize(as_sector([[a, b], [np.conj(b), a]]))
    assert decomp.energies == pytest.approx([a - abs(b), a + abs(b)])


def test_diagonal_matrix():
    decomp = diagonalize(as_sector(np.diag([3.0, -1.0, 2.0])))
    assert decomp.energies == pytest.approx([-1.0, 2.0, 3.0])
    # identity permutation up to ordering; columns are unit basis vectors
    for col in decomp.vectors.T:
        assert np.sort(np.abs(col)) == pytest.approx([0.0, 0.0, 1.0])


def test_residuals_and_orthonormality():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
    h = (a + a.conj().T) / 2
    decomp = diagonalize(as_sector(h))
    norm = np.max(np.abs(decomp.energies))
    residual = h @ decomp.vectors - decomp.vectors * decomp.energies
    assert np.max(np.linalg.norm(residual, axis=0)) < 1e-8 * norm
    gram = decomp.vectors.conj().T @ decomp.vectors
    assert np.max(np.abs(gram - np.eye(40))) < 1e-8
    assert np.max(np.abs(np.sum(np.abs(decomp.vectors) ** 2, axis=0) - 1)) < 1e-10


def test_phase_gauge():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    decomp = diagonalize(as_sector((a + a.conj().T) / 2))
    for col in decomp.vectors.T:
        lead = col[np.argmax(np.abs(col))]
        assert lead.imag == pytest.approx(0.0, abs=1e-12)
        assert lead.real > 0


def test_non_hermitian_rejected():
    with pytest.raises(NonHermitianError):
        diagonalize(as_sector([[0.0, 1.0], [0.5, 0.0]]))


def test_energies_ascending_and_count():
    basis = momentum_basis(8, 3)
    decomp = diagonalize(build_sector_hamiltonian(basis, ModelParams(8, 1.0, 1.0)))
    assert decomp.dim == basis.dim
    assert np.all(np.diff(decomp.energies) >= 0)


def test_sector_vs_full_spectrum():
    params = ModelParams(8, 1.0, 1.0)
    full = np.sort(np.linalg.eigvalsh(build_full_hamiltonian(params).toarray()))
    union = np.concatenate(
        [
            diagonalize(build_sector_hamiltonian(momentum_basis(8, k), params)).energies
            for k in range(8)
        ]
    )
    assert np.max(np.abs(np.sort(union) - full)) < 1e-9


def test_determinism():
    basis = momentum_basis(7, 2)
    matrix = build_sector_hamiltonian(basis, ModelParams(7, 1.0, 1.0))
    d1 = diagonalize(matrix)
    d2 = diagonalize(matrix)
    assert np.array_equal(d1.energies, d2.energies)
    assert np.array_equal(d1.vectors, d2.vectors)


def test_cache_roundtrip_bit_exact(tmp_path):
    params = ModelParams(10, 1.0, 1.0)
    basis = momentum_basis(10, 1)
    decomp = diagonalize(build_sector_hamiltonian(basis, params))
    cache_store(decomp, tmp_path)
    loaded = cache_load(params, 1, tmp_path)
    assert loaded is not None
    assert np.array_equal(loaded.energies, decomp.energies)
    assert np.array_equal(loaded.vectors, decomp.vectors)


def test_cache_key_is_exact(tmp_path):
    params = ModelParams(6, 1.0, 1.0)
    decomp = diagonalize(build_sector_hamiltonian(momentum_basis(6, 0), params))
    cache_store(decomp, tmp_path)
    nudged = ModelParams(6, 1.0 + 1e-15, 1.0)
    assert nudged.lam != params.lam
    assert cache_load(nudged, 0, tmp_path) is None
    assert cache_load(params, 1, tmp_path) is None


def test_cache_corruption_detected(tmp_path):
    params = ModelParams(6, 1.0, 1.0)
    decomp = diagonalize(build_sector_hamiltonian(momentum_basis(6, 0), params))
    meta_path = cache_store(decomp, tmp_path)
    bin_path = meta_path.with_suffix(".bin")
    payload = bytearray(bin_path.read_bytes())
    payload[13] ^= 0xFF
    bin_path.write_bytes(bytes(payload))
    with pytest.raises(CacheCorruptionError):
        cache_load(params, 0, tmp_path)


def test_cache_version_mismatch_is_a_miss(tmp_path):
    import json

    params = ModelParams(6, 1.0, 1.0)
    decomp = diagonalize(build_sector_hamiltonian(momentum_basis(6, 0), params))
    meta_path = cache_store(decomp, tmp_path)
    meta = json.loads(meta_path.read_text())
    meta["version"] = 999
    meta_path.write_text(json.dumps(meta))
    assert cache_load(params, 0, tmp_path) is None


def test_diagonalize_cached(tmp_path):
    params = ModelParams(6, 1.0, 1.0)
    basis = momentum_basis(6, 2)

    def builder():
        return build_sector_hamiltonian(basis, params)

    first, hit1 = diagonalize_cached(builder, params, 2, tmp_path)
    second, hit2 = diagonalize_cached(builder, params, 2, tmp_path)
    assert (hit1, hit2) == (False, True)
    assert np.array_equal(first.energies, second.energies)
    assert np.array_equal(first.vectors, second.vectors)
