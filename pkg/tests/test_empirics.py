"""Empirical eigenvector statistics: windowing, strength functions, spacing."""

import numpy as np
import pytest

from isingchaos.eigensolve import EigenDecomposition, diagonalize
from isingchaos.empirics import (
    GOE_MEAN_R,
    POISSON_MEAN_R,
    compare,
    coefficient_samples,
    empirical_moments,
    empirical_participation_ratio,
    empirical_strength_function,
    goe_surrogate_levels,
    inversion_blocks,
    inversion_matrix,
    operator_expectations,
    poisson_surrogate_levels,
    sector_state_moments,
    spacing_ratio,
    split_by_parity,
    strength_moments,
    windowed_coefficient_stats,
    windows_fixed_count,
    windows_fixed_width,
    z_parity_signs,
)
from isingchaos.hamiltonian import ModelParams, build_sector_hamiltonian
from isingchaos.spin_basis import momentum_basis


def synthetic_decomposition(vectors: np.ndarray, energies=None) -> EigenDecomposition:
    n_states = vectors.shape[1]
    if energies is None:
        energies = np.arange(n_states, dtype=float)
    return EigenDecomposition(
        params=ModelParams(2, 0.0, 0.0),
        k=0,
        energies=np.asarray(energies, dtype=float),
        vectors=np.asarray(vectors, dtype=np.complex128),
    )


def test_windows_fixed_count():
    energies = np.linspace(0, 1, 103)
    windows = windows_fixed_count(energies, 25)
    assert [w.size for w in windows] == [25, 25, 25, 25, 3]
    assert [w.short for w in windows] == [False, False, False, False, True]
    covered = np.concatenate([w.indices for w in windows])
    assert sorted(covered) == list(range(103))
    with pytest.raises(ValueError):
        windows_fixed_count(energies, 1)


def test_windows_fixed_width():
    energies = np.concatenate([np.linspace(0, 1, 50), [5.0]])
    windows = windows_fixed_width(energies, 0.25)
    assert all(w.size >= 2 for w in windows)
    assert all(w.hi - w.lo == pytest.approx(0.25) for w in windows)
    with pytest.raises(ValueError):
        windows_fixed_width(energies, 0.0)


def test_window_stats_on_true_gaussian_samples():
    rng = np.random.default_rng(123)
    dim = 3000
    vectors = rng.standard_normal((4, dim)) * 0.01
    decomp = synthetic_decomposition(vectors)
    windows = windows_fixed_count(decomp.energies, dim)
    stats = windowed_coefficient_stats(decomp, 1, windows)[0]
    assert not stats.insufficient
    assert stats.mean == pytest.approx(0.0, abs=4 * 0.01 / np.sqrt(dim))
    assert stats.variance == pytest.approx(1e-4, rel=0.1)
    assert 0.5 < stats.chi2_reduced < 1.5


def test_window_stats_insufficient_flag():
    rng = np.random.default_rng(1)
    decomp = synthetic_decomposition(rng.standard_normal((3, 20)))
    windows = windows_fixed_count(decomp.energies, 20)
    stats = windowed_coefficient_stats(decomp, 0, windows)[0]
    assert stats.insufficient


def test_variance_estimators_agree(store):
    # window-mean |C|^2 and the averaged-strength-function construction are
    # the same sum; both paths must agree identically
    basis, decomp = store.get(10, 1)
    windows = windows_fixed_count(decomp.energies, 40)
    sym = 17
    weights = np.abs(decomp.vectors[sym, :]) ** 2
    for w in windows:
        direct = weights[w.indices].mean()
        strength_path = weights[w.indices].sum() / w.size
        assert direct == pytest.approx(strength_path, rel=1e-14)


def test_coefficient_samples_real_vs_complex(store):
    basis0, decomp0 = store.get(10, 0)
    s0 = coefficient_samples(decomp0, 5, np.arange(decomp0.dim))
    assert s0.size == decomp0.dim  # real sector: one sample per state
    basis1, decomp1 = store.get(10, 1)
    s1 = coefficient_samples(decomp1, 5, np.arange(decomp1.dim))
    assert s1.size == 2 * decomp1.dim  # complex sector: re and im parts


def test_strength_function_weight_and_sum_rules(store):
    basis, decomp = store.get(10, 2)
    params = ModelParams(10, 1.0, 1.0)
    matrix = build_sector_hamiltonian(basis, params).entries
    for sym in (0, 11, 53):
        edges, density = empirical_strength_function(decomp, sym, bins=50)
        total = np.sum(density * np.diff(edges))
        assert abs(total - 1.0) < 1e-10
        emp = strength_moments(decomp, sym, order=4)
        ref = sector_state_moments(matrix, sym, order=4)
        assert np.max(np.abs(emp - ref) / np.maximum(np.abs(ref), 1.0)) < 1e-8


def test_strength_function_centers_on_diagonal_at_strong_field(store):
    params = ModelParams(10, 5.0, 1.0)
    basis = momentum_basis(10, 1)
    decomp = diagonalize(build_sector_hamiltonian(basis, params))
    sym = 3
    e_n = params.lam * (10 - 2 * basis.states[sym].orbit.n_up)
    mean_e = strength_moments(decomp, sym, order=1)[0]
    sigma = np.sqrt(10 * (1 + 1.0))
    assert abs(mean_e - e_n) < sigma


def test_strength_completeness(store):
    # summing |C|^2 over all symbols turns the strength function into the
    # plain spectral measure
    basis, decomp = store.get(10, 3)
    total = np.sum(np.abs(decomp.vectors) ** 2, axis=0)
    assert total == pytest.approx(np.ones(decomp.dim), abs=1e-10)


def test_participation_ratio_synthetic():
    aligned = np.zeros((4, 1), dtype=complex)
    aligned[2, 0] = 1.0
    _, pr = empirical_participation_ratio(synthetic_decomposition(aligned, [0.0]))
    assert pr[0] == pytest.approx(1.0)
    uniform = np.full((8, 1), np.sqrt(1 / 8), dtype=complex)
    _, pr = empirical_participation_ratio(synthetic_decomposition(uniform, [0.0]))
    assert pr[0] == pytest.approx(8.0)


def test_participation_ratio_bounds(store):
    basis, decomp = store.get(10, 1)
    _, pr = empirical_participation_ratio(decomp)
    assert np.all(pr >= 1.0 - 1e-9)
    assert np.all(pr <= decomp.dim + 1e-9)


def test_empirical_moments_q1_is_one(store):
    basis, decomp = store.get(10, 2)
    windows = windows_fixed_count(decomp.energies, 30)
    m1 = empirical_moments(decomp, 1.0, windows)
    assert m1 == pytest.approx(np.ones(len(windows)), abs=1e-12)
    with pytest.raises(ValueError):
        empirical_moments(decomp, 0.5, windows)


def test_empirical_moments_q2_vs_participation(store):
    basis, decomp = store.get(10, 2)
    windows = windows_fixed_count(decomp.energies, 30)
    m2 = empirical_moments(decomp, 2.0, windows)
    _, pr = empirical_participation_ratio(decomp)
    for w, m in zip(windows, m2):
        assert m == pytest.approx(np.mean(1.0 / pr[w.indices]), rel=1e-12)


def test_spacing_ratio_surrogates():
    rng = np.random.default_rng(7)
    goe = np.mean(
        [spacing_ratio(goe_surrogate_levels(800, rng)).mean_r for _ in range(12)]
    )
    assert goe == pytest.approx(GOE_MEAN_R, abs=0.01)
    poisson = spacing_ratio(poisson_surrogate_levels(150_000, rng)).mean_r
    assert poisson == pytest.approx(POISSON_MEAN_R, abs=0.01)


def test_spacing_ratio_excludes_degeneracies():
    rng = np.random.default_rng(3)
    base = np.sort(rng.uniform(0, 1, 400))
    doubled = np.sort(np.concatenate([base, base]))
    res = spacing_ratio(doubled, bulk_fraction=1.0)
    assert res.n_excluded == pytest.approx(base.size, abs=2)
    with pytest.raises(ValueError):
        spacing_ratio(np.array([1.0, 1.0, 1.0]))


def test_inversion_matrix_is_involution_and_commutes(store):
    for n_sites, k in ((6, 0), (6, 3), (9, 0)):
        basis = momentum_basis(n_sites, k)
        s_op = inversion_matrix(basis)
        assert np.max(np.abs(s_op @ s_op - np.eye(basis.dim))) < 1e-12
        h = build_sector_hamiltonian(basis, ModelParams(n_sites, 1.0, 0.7)).entries
        assert np.max(np.abs(s_op @ h - h @ s_op)) < 1e-12
    with pytest.raises(ValueError):
        inversion_matrix(momentum_basis(6, 1))


def test_half_momentum_inversion_phases():
    # at k = N/2 invariant states may carry inversion eigenvalue -1; the
    # operator stays a real involution (classified by enumeration)
    basis = momentum_basis(8, 4)
    s_op = inversion_matrix(basis)
    assert np.max(np.abs(s_op.imag)) == 0.0
    diag = np.array(
        [
            s_op[i, i].real
            for i, st in enumerate(basis.states)
            if st.partner_index is None
        ]
    )
    assert set(np.round(diag).astype(int)) <= {-1, 1}
    assert np.any(diag < 0)  # the -1 branch genuinely occurs


def test_split_by_parity_counts(store):
    basis, decomp = store.get(12, 0)
    s_op = inversion_matrix(basis)
    plus, minus, mixed = split_by_parity(decomp, s_op)
    assert mixed.size == 0
    assert plus.size == round(0.5 * (1 + basis.delta) * basis.dim)
    assert minus.size == round(0.5 * (1 - basis.delta) * basis.dim)
    expect = operator_expectations(decomp, s_op)
    assert np.max(np.abs(np.abs(expect) - 1.0)) < 1e-6


def test_inversion_blocks_reproduce_sector_spectrum(store):
    basis = momentum_basis(10, 0)
    params = ModelParams(10, 1.0, 1.0)
    h = build_sector_hamiltonian(basis, params).entries
    hp, hm = inversion_blocks(basis, h)
    assert hp.shape[0] + hm.shape[0] == basis.dim
    union = np.sort(np.concatenate([np.linalg.eigvalsh(hp), np.linalg.eigvalsh(hm)]))
    full = np.sort(np.linalg.eigvalsh(h))
    assert np.max(np.abs(union - full)) < 1e-9


def test_z_parity_blocks_at_zero_longitudinal_field():
    basis = momentum_basis(8, 0)
    params = ModelParams(8, 1.0, 0.0)
    h = build_sector_hamiltonian(basis, params).entries
    signs = z_parity_signs(basis)
    collected = []
    for zsign in (1, -1):
        subset = np.flatnonzero(signs == zsign)
        hp, hm = inversion_blocks(basis, h, subset)
        collected += [np.linalg.eigvalsh(hp), np.linalg.eigvalsh(hm)]
    union = np.sort(np.concatenate(collected))
    assert np.max(np.abs(union - np.sort(np.linalg.eigvalsh(h)))) < 1e-9


def test_compare_identical_and_offset(store):
    basis, decomp = store.get(10, 1)
    windows = windows_fixed_count(decomp.energies, 25)
    _, pr = empirical_participation_ratio(decomp)
    emp = np.array([pr[w.indices].mean() for w in windows])
    grid = np.array([w.center for w in windows])
    exact = emp.copy()
    report = compare(grid, exact, windows, emp, decomp.dim)
    assert report.bulk_median == pytest.approx(0.0, abs=1e-12)
    report_off = compare(grid, exact, windows, emp * 1.10, decomp.dim)
    assert report_off.bulk_median == pytest.approx(0.10, rel=1e-6)
    flagged = [r for r in report.rows if not r.in_bulk]
    assert flagged  # edge windows are flagged, not dropped
    with pytest.raises(ValueError):
        compare(grid + 1e6, exact, windows, emp, decomp.dim)


def test_compare_bulk_fraction():
    energies = np.linspace(0, 1, 200)
    vectors = np.eye(200, dtype=complex)
    decomp = synthetic_decomposition(vectors, energies)
    windows = windows_fixed_count(energies, 20)
    emp = np.ones(len(windows))
    grid = np.linspace(0, 1, 50)
    report = compare(grid, np.ones(50), windows, emp, 200, bulk_fraction=0.6)
    in_bulk = [r.in_bulk for r in report.rows]
    assert sum(in_bulk) == 6  # central 60% of ten 20-level windows
