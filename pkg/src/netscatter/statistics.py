"""Analytic transfer-efficiency statistics and histogram utilities.

All quantities are in scaled units: ``gamma_tilde = Gamma / 2V`` and
``delta_s_tilde = delta_s / 2V``. The relative doublet shift is Cauchy
distributed with width ``sigma_tilde`` and location ``s0_tilde``; the
transfer probability at a doublet energy is a deterministic function of it,
so its density follows by change of variables.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyInput, OutOfDomain

EDGE_DELTA = 1e-4
_DOUBLET_PREFACTOR = (2.0 / np.pi) ** 1.5


@dataclass(frozen=True)
class ScaledParams:
    gamma_tilde: float = 1.0
    sigma_tilde: float = 1.0
    s0_tilde: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.gamma_tilde) and self.gamma_tilde > 0):
            raise ValueError("gamma_tilde must be positive and finite")
        if not (np.isfinite(self.sigma_tilde) and self.sigma_tilde > 0):
            raise ValueError("sigma_tilde must be positive and finite")
        if not np.isfinite(self.s0_tilde):
            raise ValueError("s0_tilde must be finite")


def cauchy_pdf(delta_s_tilde, sigma_tilde, s0_tilde=0.0):
    x = np.asarray(delta_s_tilde, dtype=float) - s0_tilde
    return sigma_tilde / (np.pi * (sigma_tilde ** 2 + x ** 2))


def cauchy_cdf(delta_s_tilde, sigma_tilde, s0_tilde=0.0):
    x = np.asarray(delta_s_tilde, dtype=float) - s0_tilde
    return 0.5 + np.arctan(x / sigma_tilde) / np.pi


def sample_cauchy(n, sigma_tilde, s0_tilde=0.0, rng=None):
    """Inverse-CDF Cauchy samples from a seeded generator."""
    rng = np.random.default_rng(rng)
    u = rng.random(n)
    return s0_tilde + sigma_tilde * np.tan(np.pi * (u - 0.5))


def efficient_fraction(gamma_tilde, sigma_tilde, s0_tilde=0.0):
    """Probability that the doublet resonances stay separated,
    ``P(gamma_tilde < |1 + delta_s_tilde|)``."""
    g = np.asarray(gamma_tilde, dtype=float)
    return (1.0
            - np.arctan((g - 1.0 - s0_tilde) / sigma_tilde) / np.pi
            - np.arctan((g + 1.0 + s0_tilde) / sigma_tilde) / np.pi)


def approx_p_at_doublet_energy(delta_s_tilde, gamma_tilde):
    """Two-pole transfer probability at a closed-system doublet energy."""
    a = (1.0 + np.asarray(delta_s_tilde, dtype=float)) ** 2
    return a / (a + 0.25 * np.asarray(gamma_tilde, dtype=float) ** 2)


def _check_domain(p, delta):
    p = np.asarray(p, dtype=float)
    if np.any((p < delta) | (p > 1.0 - delta)):
        raise OutOfDomain(f"p must lie in [{delta}, {1 - delta}]")
    return p


def efficiency_density(p, gamma_tilde, sigma_tilde, s0_tilde=0.0, delta=EDGE_DELTA):
    """Density of the transfer probability over the disorder ensemble.

    Only defined away from the edges; ``p`` must lie in ``[delta, 1-delta]``
    since the density diverges at ``0`` and ``1``.
    """
    p = _check_domain(p, delta)
    r = 0.5 * gamma_tilde * np.sqrt(p / (1.0 - p))
    c = 1.0 + s0_tilde
    lorentz = (sigma_tilde / (sigma_tilde ** 2 + (c - r) ** 2)
               + sigma_tilde / (sigma_tilde ** 2 + (c + r) ** 2))
    return gamma_tilde / (4.0 * np.pi * np.sqrt(p * (1.0 - p) ** 3)) * lorentz


def efficiency_cdf(p, gamma_tilde, sigma_tilde, s0_tilde=0.0):
    """``P(p' <= p)`` for the same ensemble, in closed form.

    ``p' <= p`` iff ``|1 + x| <= (gamma_tilde/2) sqrt(p/(1-p))`` with ``x``
    the Cauchy shift.
    """
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        t = 0.5 * gamma_tilde * np.sqrt(p / (1.0 - p))
    upper = np.where(np.isinf(t), 1.0, cauchy_cdf(-1.0 + t, sigma_tilde, s0_tilde))
    lower = np.where(np.isinf(t), 0.0, cauchy_cdf(-1.0 - t, sigma_tilde, s0_tilde))
    return upper - lower


def scaled_params_from_model(chi, xi, v, n_sites=None, gamma_tilde=1.0):
    """Cauchy width and location of the scaled shift for a sampling model.

    ``sigma_tilde = chi^2 / (V xi)`` and ``s0_tilde = chi^2 / (2 xi^2)``;
    ``n_sites`` is accepted for symmetry with the sampling parameters and
    does not enter.
    """
    if xi <= 0 or v <= 0:
        raise ValueError("xi and V must be positive")
    sigma = chi ** 2 / (v * xi)
    if sigma <= 0:
        raise ValueError("chi = 0 gives no shift fluctuations (sigma_tilde = 0)")
    return ScaledParams(gamma_tilde=gamma_tilde, sigma_tilde=sigma,
                        s0_tilde=chi ** 2 / (2.0 * xi ** 2))


def doublet_bound_value(chi, xi, n_sites):
    """Left-hand side of the dominant-doublet criterion."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    return _DOUBLET_PREFACTOR * np.sqrt(n_sites / 2.0 - 1.0) * chi / xi


def dominant_doublet_bound(chi, xi, n_sites, epsilon_budget):
    return bool(doublet_bound_value(chi, xi, n_sites) < epsilon_budget)


def chi_at_bound(xi, n_sites, epsilon_budget):
    """Largest link scale allowed by the dominant-doublet criterion."""
    if n_sites < 4:
        raise ValueError("need bulk sites (n_sites >= 4)")
    return epsilon_budget * xi / (_DOUBLET_PREFACTOR * np.sqrt(n_sites / 2.0 - 1.0))


def coupling_for_sigma(chi, xi, sigma_tilde):
    """Direct coupling ``V`` that yields ``sigma_tilde`` for given scales."""
    return chi ** 2 / (sigma_tilde * xi)


def estimate_cauchy(samples):
    """Robust ``(location, width)``: median and half the interquartile range."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptyInput("no samples")
    q1, med, q3 = np.percentile(samples, [25, 50, 75])
    return float(med), float(0.5 * (q3 - q1))


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    n_below: int = 0
    n_above: int = 0

    @property
    def n_inside(self):
        return int(self.counts.sum())

    @property
    def n_total(self):
        return self.n_inside + self.n_below + self.n_above

    @property
    def widths(self):
        return np.diff(self.bin_edges)

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def normalized_density(self):
        """Counts per unit width, normalised over the in-range samples."""
        if self.n_inside == 0:
            return np.zeros(len(self.counts))
        return self.counts / (self.n_inside * self.widths)

    @property
    def mass(self):
        """Fraction of *all* samples per bin (out-of-range ones included)."""
        return self.counts / max(self.n_total, 1)

    def merge(self, other):
        if not np.array_equal(self.bin_edges, other.bin_edges):
            raise ValueError("cannot merge histograms with different bins")
        return Histogram(self.bin_edges, self.counts + other.counts,
                         self.n_below + other.n_below, self.n_above + other.n_above)

    def write_csv(self, path, theory=None):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["bin_center", "density"] + (["theory"] if theory is not None else [])
            writer.writerow(header)
            for k, (x, d) in enumerate(zip(self.centers, self.normalized_density)):
                row = [repr(float(x)), repr(float(d))]
                if theory is not None:
                    row.append(repr(float(theory[k])))
                writer.writerow(row)


def make_histogram(samples, n_bins, range_):
    """Fixed-bin histogram; samples outside ``range_`` are tallied separately."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise EmptyInput("no samples")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    lo, hi = float(range_[0]), float(range_[1])
    if not hi > lo:
        raise ValueError("empty histogram range")
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    return Histogram(edges, counts.astype(np.int64),
                     int(np.sum(samples < lo)), int(np.sum(samples > hi)))


def write_curve_csv(path, columns):
    """Write equal-length columns (a name -> values mapping) as CSV."""
    names = list(columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*(np.asarray(columns[k], dtype=float) for k in names)):
            writer.writerow([repr(float(v)) for v in row])
