"""Statistical models of chaotic eigenfunctions for the two-field Ising chain.

Per up-spin count n the strength function P_n(E) is modelled three ways:
a plain Gaussian from the first two moments, a Gram-Charlier series adding
the third and fourth cumulants through Hermite polynomials, and a
moment-matched maximum-entropy density exp(-sum_j mu_j E^j)/Z fitted by
Newton iteration.  On top of the P_n the module evaluates the model spectral
density, symmetry-corrected wave-function moments M_q(E), and the predicted
participation ratio, including the corrections from inversion-invariant
basis states (real vs complex coefficient ensembles).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import gamma

from .hamiltonian import ModelParams
from .moments import LocalMomentSet, analytic_moments
from .spin_basis import MomentumBasis

log = logging.getLogger(__name__)

VARIANTS = ("gaussian", "gram_charlier", "gibbs")

GC_CLAMP_SIGMAS = 6.0
GIBBS_HALF_WIDTH = 12.0  # integration half-width in units of sigma


def fmt_float(x: float) -> str:
    """Locale-independent 17-significant-digit float formatting."""
    return format(float(x), ".17g")


def r_q_complex(q) -> np.ndarray | float:
    """Moments <|C|^2q> / <|C|^2>^q of a complex Gaussian coefficient."""
    return gamma(np.asarray(q, dtype=float) + 1.0)


def r_q_real(q) -> np.ndarray | float:
    """Moments <C^2q> / <C^2>^q of a real Gaussian coefficient."""
    q = np.asarray(q, dtype=float)
    return 2.0**q * gamma(q + 0.5) / np.sqrt(np.pi)


def _hermite3(x):
    return x**3 - 3 * x


def _hermite4(x):
    return x**4 - 6 * x**2 + 3


class GibbsFitError(RuntimeError):
    """Newton iteration failed; caller should fall back to Gram-Charlier."""


class GibbsInfeasibleError(RuntimeError):
    """Fitted density is dominated by the integration boundary."""


def _panel_quadrature(n_nodes: int, half_width: float = GIBBS_HALF_WIDTH):
    """Composite Gauss-Legendre rule on [-half_width, half_width]."""
    per_panel = 40
    n_panels = max(2, int(np.ceil(n_nodes / per_panel)))
    x, w = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(-half_width, half_width, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return (mid + half * x[None, :]).ravel(), (half * w[None, :]).ravel()


def _std_moments(coeffs: np.ndarray, nodes, weights, n_max: int = 8):
    """Raw moments 0..n_max of exp(-sum_j c_j x^j) on the quadrature grid."""
    logp = -sum(c * nodes**j for j, c in enumerate(coeffs, start=1))
    logp -= logp.max()
    density = weights * np.exp(logp)
    z = density.sum()
    return np.array([np.sum(density * nodes**j) for j in range(n_max + 1)]) / z


@dataclass(frozen=True)
class GibbsFit:
    """Max-entropy fit in the standardized variable x = (E - E_n) / sigma."""

    e_center: float
    sigma: float
    std_coeffs: tuple[float, float, float, float]
    log_z_std: float
    multipliers: tuple[float, float, float, float]
    log_z_energy: float
    n_orders: int
    residual: float
    boundary_ratio: float

    def density(self, energy) -> np.ndarray:
        x = (np.asarray(energy, dtype=float) - self.e_center) / self.sigma
        logp = -sum(c * x**j for j, c in enumerate(self.std_coeffs, start=1))
        return np.exp(logp - self.log_z_std) / self.sigma


def _newton_solve(targets, n_orders, nodes, weights, tol, max_iter, start):
    """Damped Newton on the standardized moment equations; returns best found."""
    coeffs = np.array(start, dtype=float)
    m = _std_moments(coeffs, nodes, weights)
    g = m[1 : n_orders + 1] - targets
    scale = np.maximum(np.abs(targets), 1.0)
    residual = float(np.max(np.abs(g) / scale))
    for _ in range(max_iter):
        if residual < tol:
            break
        jac = np.empty((n_orders, n_orders))
        for i in range(1, n_orders + 1):
            for j in range(1, n_orders + 1):
                jac[j - 1, i - 1] = -(m[i + j] - m[i] * m[j])
        try:
            delta = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError as exc:
            raise GibbsFitError("singular moment covariance") from exc
        step = 1.0
        improved = False
        for _ in range(40):
            trial = coeffs.copy()
            trial[:n_orders] += step * delta
            m_trial = _std_moments(trial, nodes, weights)
            g_trial = m_trial[1 : n_orders + 1] - targets
            trial_res = float(np.max(np.abs(g_trial) / scale))
            if trial_res < residual:
                coeffs, m, g, residual = trial, m_trial, g_trial, trial_res
                improved = True
                break
            step *= 0.5
        if not improved:
            break  # stalled at the quadrature noise floor; caller verifies
    return coeffs, m, residual


def _std_to_energy_moments(m_std: np.ndarray, e: float, sigma: float) -> np.ndarray:
    """Raw moments of E = e + sigma * x from standardized raw moments."""
    out = np.empty(4)
    for j in range(1, 5):
        out[j - 1] = sum(
            comb(j, i) * e ** (j - i) * sigma**i * m_std[i] for i in range(j + 1)
        )
    return out


def fit_gibbs(
    moments: LocalMomentSet,
    n_orders: int = 4,
    tol: float = 1e-8,
    max_iter: int = 100,
    n_nodes: int = 2000,
) -> GibbsFit:
    """Fit exp(-sum_{j<=n_orders} mu_j E^j)/Z to the first n_orders moments.

    Works in the standardized variable on [-12, 12] sigma with composite
    Gauss-Legendre quadrature, Newton iteration started from the Gaussian
    solution, and continuation in the cumulant magnitudes if the direct
    solve stalls.  Node count doubles until the converged moments are stable
    below ``tol``.
    """
    if n_orders not in (2, 4):
        raise ValueError("n_orders must be 2 or 4")
    sigma = float(np.sqrt(moments.sigma2))
    if n_orders == 2:
        targets = np.array([0.0, 1.0])
    else:
        m3 = moments.k3 / sigma**3
        m4 = 3.0 + moments.k4 / sigma**4
        # feasibility on the truncated support: E[x^4] <= L^2 E[x^2] with
        # equality only for boundary atoms, and the Hamburger bound below
        if m4 >= GIBBS_HALF_WIDTH**2 or m4 <= 1.0 + m3**2:
            raise GibbsInfeasibleError(
                f"standardized kurtosis {m4:.3g} not representable by a smooth "
                f"density on +-{GIBBS_HALF_WIDTH:.0f} sigma"
            )
        targets = np.array([0.0, 1.0, m3, m4])
    mu_target = np.array([moments.mu1, moments.mu2, moments.mu3, moments.mu4])
    # relative scale per energy moment; sigma^j is the fallback when a target
    # vanishes (symmetric configurations)
    mu_scale = np.where(
        np.abs(mu_target) > 1e-12 * sigma ** np.arange(1, 5),
        np.abs(mu_target),
        sigma ** np.arange(1, 5),
    )
    tol_std = max(5e-14, tol * 1e-5)

    nodes_now = n_nodes
    coeffs = None
    for _refine in range(4):
        nodes, weights = _panel_quadrature(nodes_now)
        start = np.zeros(4)
        start[1] = 0.5
        coeffs, m_std, res_std = _newton_solve(
            targets, n_orders, nodes, weights, tol_std, max_iter, start
        )
        if res_std > 1e3 * tol_std:
            # continuation: ramp the cumulants up from the Gaussian solution
            coeffs = start
            for frac in (0.25, 0.5, 0.75, 1.0):
                partial = targets.copy()
                if n_orders == 4:
                    partial[2] = frac * targets[2]
                    partial[3] = 3.0 + frac * (targets[3] - 3.0)
                coeffs, m_std, res_std = _newton_solve(
                    partial, n_orders, nodes, weights, tol_std, max_iter, coeffs
                )
        fine_nodes, fine_weights = _panel_quadrature(2 * nodes_now)
        m_fine = _std_moments(coeffs, fine_nodes, fine_weights)
        mu_fit = _std_to_energy_moments(m_fine, moments.e_n, sigma)
        residual = float(np.max(np.abs(mu_fit - mu_target)[:n_orders] / mu_scale[:n_orders]))
        if residual < tol:
            break
        nodes_now *= 2
    else:
        raise GibbsFitError(
            f"moment residual {residual:.2e} above {tol:.0e} after refinement"
        )

    logp = -sum(c * nodes**j for j, c in enumerate(coeffs, start=1))
    peak = logp.max()
    log_z_std = peak + np.log(np.sum(weights * np.exp(logp - peak)))
    boundary = max(logp[0], logp[-1])
    boundary_ratio = float(np.exp(boundary - peak))
    if boundary_ratio > 1.0:
        raise GibbsInfeasibleError(
            "max-entropy density peaks at the integration boundary; "
            "target moments are not representable on the truncated support"
        )

    # expand sum_j c_j ((E - e)/sigma)^j into energy-variable multipliers
    poly_x = np.polynomial.Polynomial([0.0, *coeffs])
    poly_e = poly_x(np.polynomial.Polynomial([-moments.e_n / sigma, 1.0 / sigma]))
    a = np.zeros(5)
    a[: len(poly_e.coef)] = poly_e.coef
    log_z_energy = float(np.log(sigma) + log_z_std + a[0])
    return GibbsFit(
        e_center=moments.e_n,
        sigma=float(sigma),
        std_coeffs=tuple(coeffs),
        log_z_std=float(log_z_std),
        multipliers=tuple(a[1:5]),
        log_z_energy=log_z_energy,
        n_orders=n_orders,
        residual=residual,
        boundary_ratio=boundary_ratio,
    )


def gibbs_energy_moments(fit: GibbsFit, n_nodes: int = 4000) -> np.ndarray:
    """Raw energy moments mu_1..mu_4 of a fitted density, by quadrature."""
    nodes, weights = _panel_quadrature(n_nodes)
    m = _std_moments(fit.std_coeffs, nodes, weights, n_max=4)
    e, s = fit.e_center, fit.sigma
    out = np.empty(4)
    for j in range(1, 5):
        out[j - 1] = sum(comb(j, i) * e ** (j - i) * s**i * m[i] for i in range(j + 1))
    return out


@dataclass
class StrengthModel:
    """Per-n strength-function model for one parameter set."""

    params: ModelParams
    variant: str
    moments: tuple[LocalMomentSet, ...]
    gibbs_fits: tuple[GibbsFit | None, ...] = ()
    _warned_clamp: bool = False

    @property
    def n_sites(self) -> int:
        return self.params.n_sites


def build_strength_model(params: ModelParams, variant: str = "gaussian") -> StrengthModel:
    """Assemble the model for all n, using mean domain-wall counts."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    moments = tuple(analytic_moments(params, n) for n in range(params.n_sites + 1))
    fits: tuple[GibbsFit | None, ...] = ()
    if variant == "gibbs":
        acc = []
        for mom in moments:
            try:
                acc.append(fit_gibbs(mom))
            except GibbsFitError:
                log.warning(
                    "Gibbs fit failed for n=%d; falling back to Gram-Charlier", mom.n_up
                )
                acc.append(None)
        fits = tuple(acc)
    return StrengthModel(params=params, variant=variant, moments=moments, gibbs_fits=fits)


def strength_density(model: StrengthModel, n_up: int, energy) -> np.ndarray:
    """Model density P_n(E); vectorized over the energy argument."""
    mom = model.moments[n_up]
    e = np.asarray(energy, dtype=float)
    sigma2 = mom.sigma2
    sigma = np.sqrt(sigma2)
    x = (e - mom.e_n) / sigma
    gauss = np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi * sigma2)
    if model.variant == "gaussian":
        return gauss
    if model.variant == "gibbs":
        fit = model.gibbs_fits[n_up] if model.gibbs_fits else None
        if fit is not None:
            return fit.density(e)
    # Gram-Charlier path (also the per-n fallback for failed Gibbs fits)
    bracket = (
        1.0
        + mom.k3 / (6.0 * sigma**3) * _hermite3(x)
        + mom.k4 / (24.0 * sigma2**2) * _hermite4(x)
    )
    out = gauss * bracket
    clamp = (np.abs(x) > GC_CLAMP_SIGMAS) & (out < 0)
    if np.any(clamp):
        if not model._warned_clamp:
            log.warning(
                "negative Gram-Charlier tail clamped to zero beyond %.0f sigma",
                GC_CLAMP_SIGMAS,
            )
            model._warned_clamp = True
        out = np.where(clamp, 0.0, out)
    return out


def _density_stack(model: StrengthModel, energy) -> np.ndarray:
    e = np.atleast_1d(np.asarray(energy, dtype=float))
    return np.stack([strength_density(model, n, e) for n in range(model.n_sites + 1)])


def model_spectral_density(
    model: StrengthModel, energy, basis: MomentumBasis | None = None
) -> np.ndarray:
    """Normalized model density of states (clipped at zero).

    Without a basis the 2^-N binomial weights of the full product basis are
    used; with a basis, the sector's per-n state counts.  Negative lobes of
    the corrected expansion are truncated so the density stays a density.
    """
    stack = _density_stack(model, energy)
    n = model.n_sites
    if basis is None:
        weights = np.array([comb(n, m) for m in range(n + 1)], dtype=float)
        weights /= 2.0**n
    else:
        weights = basis.nu_tot().astype(float)
        weights /= weights.sum()
    out = np.clip(weights @ stack, 0.0, None)
    return out if np.ndim(energy) else float(out[0])


def _clipped_power(stack: np.ndarray, q: float) -> np.ndarray:
    # negative Gram-Charlier lobes carry no weight when raised to real powers
    return np.clip(stack, 0.0, None) ** q


def delta_correction(
    basis: MomentumBasis, model: StrengthModel, energy, q: float, mode: str = "uniform"
):
    """Invariant-state weight delta_q(E), or its uniform approximation."""
    if mode == "uniform":
        return basis.delta
    if mode != "exact":
        raise ValueError("mode must be 'uniform' or 'exact'")
    stack = _clipped_power(_density_stack(model, energy), q)
    num = basis.nu_inv().astype(float) @ stack
    den = basis.nu_tot().astype(float) @ stack
    out = num / den
    return out if np.ndim(energy) else float(out[0])


def _is_real_sector(basis: MomentumBasis) -> bool:
    # k = 0 and (even N) k = N/2 give real sector matrices and real ensembles
    return basis.k == 0 or 2 * basis.k == basis.n_sites


def predict_moment(
    basis: MomentumBasis,
    model: StrengthModel,
    energy,
    q: float,
    delta_mode: str = "uniform",
):
    """Model prediction for the eigenvector moment M_q(E) in one sector.

    Real sectors (k = 0, and k = N/2 which shares the real structure) use the
    real-ensemble factor with the parity correction 1 + (2^(q-1) - 1) delta;
    complex sectors interpolate between complex and real ensemble factors
    with weight delta.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    stack = _clipped_power(_density_stack(model, energy), 1.0)
    nu = basis.nu_tot().astype(float)
    s1 = nu @ stack
    sq = nu @ stack**q
    delta = delta_correction(basis, model, energy, q, delta_mode)
    if _is_real_sector(basis):
        factor = r_q_real(q) * (1.0 + (2.0 ** (q - 1) - 1.0) * delta)
    else:
        factor = r_q_complex(q) + (r_q_real(q) - r_q_complex(q)) * delta
    out = factor * sq / s1**q
    return out if np.ndim(energy) else float(out[0])


def predict_participation_ratio(
    basis: MomentumBasis,
    model: StrengthModel,
    energy,
    delta_mode: str = "uniform",
):
    """Predicted Pr(E) = 1 / M_2(E); effective R_2 is 2 + delta (complex
    sectors) or 3 (1 + delta) (real sectors)."""
    return 1.0 / predict_moment(basis, model, energy, 2.0, delta_mode)


@dataclass(frozen=True)
class ParitySplit:
    """Inversion-parity bookkeeping for the k = 0 sector."""

    delta: float
    n_plus: float
    n_minus: float
    variance_scale_plus: float
    variance_scale_minus: float

    def rho_weight(self, parity: int) -> float:
        return 0.5 * (1.0 + parity * self.delta)

    def moment_factor(self, q: float, parity: int) -> float:
        """M_q^(parity) / M_q for eigenstates of fixed inversion parity."""
        d = self.delta
        if parity > 0:
            return (1.0 - d + 2.0**q * d) / (1.0 + d) ** q
        return (1.0 - d) ** (1.0 - q)

    def mixed_moment_factor(self, q: float) -> float:
        """Parity-density-weighted average of the two moment factors."""
        return sum(
            self.rho_weight(p) * self.moment_factor(q, p) for p in (+1, -1)
        )

    def first_order_factor(self, q: float) -> float:
        return 1.0 + (2.0 ** (q - 1) - 1.0) * self.delta


def parity_split_quantities(basis: MomentumBasis) -> ParitySplit:
    """Subspace sizes, densities, and variance scalings at momentum zero."""
    delta = basis.delta
    dim = basis.dim
    return ParitySplit(
        delta=delta,
        n_plus=0.5 * (1 + delta) * dim,
        n_minus=0.5 * (1 - delta) * dim,
        variance_scale_plus=2.0 / (1 + delta),
        variance_scale_minus=2.0 / (1 - delta),
    )


@dataclass
class PredictionCurve:
    """Model predictions sampled on an energy grid, ready for export."""

    energies: np.ndarray
    rho: np.ndarray
    moments: dict[float, np.ndarray]
    pr: np.ndarray
    variant: str
    sector: str
    corrections: str


def prediction_curve(
    basis: MomentumBasis,
    model: StrengthModel,
    energies: np.ndarray,
    q_values: tuple[float, ...] = (1.5, 2.0, 3.0),
    delta_mode: str = "uniform",
    apply_symmetry_correction: bool = True,
) -> PredictionCurve:
    """Evaluate density, M_q, and Pr predictions on a grid.

    ``apply_symmetry_correction=False`` drops the invariant-state corrections
    (delta = 0), giving the plain Gaussian-ensemble baseline.
    """
    energies = np.asarray(energies, dtype=float)
    rho = model_spectral_density(model, energies, basis)
    if apply_symmetry_correction:
        mode = delta_mode
        moments = {q: predict_moment(basis, model, energies, q, mode) for q in q_values}
        pr = predict_participation_ratio(basis, model, energies, mode)
    else:
        stack = _clipped_power(_density_stack(model, energies), 1.0)
        nu = basis.nu_tot().astype(float)
        s1 = nu @ stack
        factor = r_q_real if _is_real_sector(basis) else r_q_complex
        moments = {q: factor(q) * (nu @ stack**q) / s1**q for q in q_values}
        pr = 1.0 / moments[2.0] if 2.0 in moments else 1.0 / (
            factor(2.0) * (nu @ stack**2) / s1**2
        )
    corrections = []
    if model.variant != "gaussian":
        corrections.append(model.variant)
    if apply_symmetry_correction:
        corrections.append(f"delta[{delta_mode}]")
    return PredictionCurve(
        energies=energies,
        rho=rho,
        moments=moments,
        pr=pr,
        variant=model.variant,
        sector=f"k={basis.k}",
        corrections="+".join(corrections) if corrections else "none",
    )


def write_prediction_csv(curve: PredictionCurve, path) -> None:
    """CSV export with fixed column order and 17-digit floats."""
    qs = sorted(curve.moments)
    header = ["E", "rho"] + [f"M_{fmt_float(q)}" for q in qs] + [
        "Pr",
        "variant",
        "sector",
        "corrections",
    ]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i, e in enumerate(curve.energies):
            row = [fmt_float(e), fmt_float(curve.rho[i])]
            row += [fmt_float(curve.moments[q][i]) for q in qs]
            row += [
                fmt_float(curve.pr[i]),
                curve.variant,
                curve.sector,
                curve.corrections,
            ]
            fh.write(",".join(row) + "\n")
