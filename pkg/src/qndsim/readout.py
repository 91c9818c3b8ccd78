"""Single-shot readout statistics: Gaussian-mixture shots, thresholding,
preselection, and double-Gaussian histogram fits.

Quadrature amplitudes are in units of the per-component standard deviation
(sigma = 1 by default); the absolute scale of the measurement chain drops
out of every figure of merit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erfc

from .errors import FitError

DEFAULT_SNR = 5.75  # |mu_e - mu_g| / sigma placing the overlap error at 0.2%
DEFAULT_BINS = 101
DEFAULT_SPAN_SIGMAS = 6.0
PRESELECT_SIGMAS = 3.0  # conservative ground-state heralding threshold


@dataclass
class GaussianMixture:
    """Two Gaussian components on the quadrature axis.

    Widths are shared by default; sigma_e overrides the excited component
    for generative use (fits and the overlap formula stay common-width).
    """

    mu_g: float = 0.0
    mu_e: float = DEFAULT_SNR
    sigma: float = 1.0
    w_e: float = 0.5
    sigma_e: float | None = None

    def __post_init__(self):
        if self.sigma <= 0 or (self.sigma_e is not None and self.sigma_e <= 0):
            raise ValueError("sigma must be positive")
        if self.mu_g == self.mu_e:
            raise ValueError("component means must differ")
        if not 0 <= self.w_e <= 1:
            raise ValueError("w_e must lie in [0, 1]")

    @property
    def excited_sigma(self) -> float:
        return self.sigma if self.sigma_e is None else self.sigma_e


@dataclass
class ShotSet:
    """Integrated quadrature amplitudes with their preparation tag and seed."""

    values: np.ndarray
    label: str = ""
    seed: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def __len__(self) -> int:
        return self.values.size


@dataclass
class Threshold:
    """Decision boundary; orientation names the side assigned to e."""

    q_star: float
    orientation: str = "above"

    def __post_init__(self):
        if not np.isfinite(self.q_star):
            raise ValueError("threshold must be finite")
        if self.orientation not in ("above", "below"):
            raise ValueError("orientation must be 'above' or 'below'")


@dataclass
class Histogram:
    """Binned counts on a uniform quadrature grid."""

    bin_centers: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.bin_centers = np.asarray(self.bin_centers, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.bin_centers.shape != self.counts.shape:
            raise ValueError("bin centers and counts must align")

    @property
    def bin_width(self) -> float:
        return float(self.bin_centers[1] - self.bin_centers[0])

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass
class DoubleGaussianFit:
    mixture: GaussianMixture
    stderr: dict[str, float]
    rss: float


def sample_shots(mix: GaussianMixture, p_e: float, n: int, seed: int) -> ShotSet:
    """Draw n shots, each from the e component with probability p_e."""
    if n < 1:
        raise ValueError("need at least one shot")
    if not 0 <= p_e <= 1:
        raise ValueError("p_e must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    excited = rng.random(n) < p_e
    means = np.where(excited, mix.mu_e, mix.mu_g)
    widths = np.where(excited, mix.excited_sigma, mix.sigma)
    values = means + widths * rng.standard_normal(n)
    return ShotSet(values, label=f"p_e={p_e:g}", seed=seed)


def midpoint_threshold(mix: GaussianMixture) -> Threshold:
    orientation = "above" if mix.mu_e > mix.mu_g else "below"
    return Threshold((mix.mu_g + mix.mu_e) / 2, orientation)


def preselect_threshold(mix: GaussianMixture, n_sigmas: float = PRESELECT_SIGMAS) -> Threshold:
    """Conservative boundary n_sigmas from the ground mean toward e."""
    sign = 1.0 if mix.mu_e > mix.mu_g else -1.0
    orientation = "above" if sign > 0 else "below"
    return Threshold(mix.mu_g + sign * n_sigmas * mix.sigma, orientation)


def assigned_fraction(shots: ShotSet, thr: Threshold) -> float:
    """Fraction of shots assigned to the excited state."""
    if len(shots) == 0:
        return 0.0
    if thr.orientation == "above":
        return float(np.mean(shots.values > thr.q_star))
    return float(np.mean(shots.values < thr.q_star))


def preselect(shots: ShotSet, thr: Threshold) -> tuple[ShotSet, float]:
    """Keep only ground-assigned shots; report the discarded fraction."""
    if len(shots) == 0:
        return ShotSet(np.empty(0), label=shots.label, seed=shots.seed), 0.0
    if thr.orientation == "above":
        keep = shots.values <= thr.q_star
    else:
        keep = shots.values >= thr.q_star
    retained = ShotSet(shots.values[keep], label=shots.label, seed=shots.seed)
    return retained, 1.0 - len(retained) / len(shots)


def histogram_shots(
    shots: ShotSet,
    n_bins: int = DEFAULT_BINS,
    span_sigmas: float = DEFAULT_SPAN_SIGMAS,
) -> Histogram:
    """Uniform binning over mean +- span_sigmas standard deviations."""
    center = shots.values.mean()
    half = span_sigmas * shots.values.std()
    edges = np.linspace(center - half, center + half, n_bins + 1)
    counts, _ = np.histogram(shots.values, bins=edges)
    return Histogram((edges[:-1] + edges[1:]) / 2, counts.astype(float))


def _mixture_counts(q, total, bin_width, mu_g, mu_e, sigma, w_e):
    norm = total * bin_width / (sigma * np.sqrt(2 * np.pi))
    g = np.exp(-((q - mu_g) ** 2) / (2 * sigma**2))
    e = np.exp(-((q - mu_e) ** 2) / (2 * sigma**2))
    return norm * ((1 - w_e) * g + w_e * e)


def _initial_guess(hist: Histogram, std: float) -> np.ndarray:
    """Peak-seeking start values (mu_g, mu_e, sigma, w_e).

    The main peak's half-maximum width estimates the component sigma; a
    second peak is searched outside a 3-sigma exclusion zone. Without
    evidence for one, the start weight is ~0 so single-component data
    converges to a vanishing excited fraction instead of a split weight.
    """
    q, counts = hist.bin_centers, hist.counts
    i1 = int(np.argmax(counts))
    half = counts[i1] / 2
    left = i1
    while left > 0 and counts[left] > half:
        left -= 1
    right = i1
    while right < len(q) - 1 and counts[right] > half:
        right += 1
    fwhm = max(q[right] - q[left], 2 * hist.bin_width)
    sigma0 = fwhm / 2.355
    outside = np.abs(q - q[i1]) > 3 * sigma0
    if np.any(outside) and counts[outside].max() > 0.05 * counts[i1]:
        i2 = np.flatnonzero(outside)[np.argmax(counts[outside])]
        mu_a, mu_b = q[i1], q[i2]
        near_b = np.abs(q - mu_b) <= 3 * sigma0
        w_b = min(max(counts[near_b].sum() / hist.total, 0.01), 0.99)
        if mu_a <= mu_b:
            return np.array([mu_a, mu_b, sigma0, w_b])
        return np.array([mu_b, mu_a, sigma0, 1.0 - w_b])
    return np.array([q[i1], q[i1] + 6 * sigma0, sigma0, 1e-3])


def fit_double_gaussian(hist: Histogram) -> DoubleGaussianFit:
    """Common-width double-Gaussian least-squares fit to binned counts.

    Residuals are scaled by the Poisson noise of each bin so the parameter
    standard errors are calibrated.
    """
    if len(hist.bin_centers) < 20:
        raise ValueError("need at least 20 bins")
    if hist.total < 100:
        raise ValueError("need at least 100 counts")
    q = hist.bin_centers
    weights = hist.counts / hist.total
    mean = float(np.sum(weights * q))
    std = float(np.sqrt(np.sum(weights * (q - mean) ** 2)))
    noise = np.sqrt(hist.counts + 1.0)

    def residuals(p):
        mu_g, mu_e, sigma, w_e = p
        model = _mixture_counts(q, hist.total, hist.bin_width, mu_g, mu_e, abs(sigma), w_e)
        return (model - hist.counts) / noise

    x0 = _initial_guess(hist, std)
    lower = [q[0] - std, q[0] - std, 1e-6 * std, 0.0]
    upper = [q[-1] + std, q[-1] + std, 2 * std + 1e-9, 1.0]
    result = least_squares(residuals, x0, bounds=(lower, upper), max_nfev=2000)
    if not result.success:
        raise FitError(f"double-Gaussian fit failed (final cost {result.cost:.3e})")
    mu_g, mu_e, sigma, w_e = result.x
    model = _mixture_counts(q, hist.total, hist.bin_width, mu_g, mu_e, abs(sigma), w_e)
    rss = float(np.sum((model - hist.counts) ** 2))
    try:
        cov = np.linalg.inv(result.jac.T @ result.jac)
        err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        err = np.full(4, np.nan)
    stderr = dict(zip(("mu_g", "mu_e", "sigma", "w_e"), err.tolist()))
    if mu_e < mu_g:  # enforce the g-below-e labeling
        mu_g, mu_e, w_e = mu_e, mu_g, 1.0 - w_e
        stderr["mu_g"], stderr["mu_e"] = stderr["mu_e"], stderr["mu_g"]
    mixture = GaussianMixture(float(mu_g), float(mu_e), float(abs(sigma)), float(w_e))
    return DoubleGaussianFit(mixture, stderr, rss)


def overlap_error(mix: GaussianMixture) -> float:
    """Misassignment probability of the midpoint threshold at equal weights.

    erfc(d / (2 sqrt(2) sigma)) / 2 with d the separation of the means.
    """
    d = abs(mix.mu_e - mix.mu_g)
    return float(0.5 * erfc(d / (2 * np.sqrt(2) * mix.sigma)))


def assignment_fidelity(eps_ge: float, eps_eg: float) -> float:
    """Readout fidelity 1 - P(g|e) - P(e|g)."""
    for x in (eps_ge, eps_eg):
        if not 0 <= x <= 1:
            raise ValueError("error rates must lie in [0, 1]")
    return 1.0 - eps_ge - eps_eg
