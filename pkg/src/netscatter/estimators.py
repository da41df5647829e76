"""scikit-learn style wrappers around the doublet and statistics routines.

``DoubletFeatures`` turns a batch of serialized networks (rows of the full
``N x N`` Hamiltonian flattened) into per-network doublet features.
``CauchyShiftDistribution`` fits the Cauchy law of scaled doublet shifts and
exposes the implied efficiency statistics.
"""

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .doublet import exact_shifts, perturbative_shifts, sector_deficits
from .network import decompose_symmetry
from .statistics import (cauchy_cdf, cauchy_pdf, efficiency_cdf, efficiency_density,
                         efficient_fraction, estimate_cauchy, sample_cauchy)

FEATURE_NAMES = ("s_plus", "s_minus", "delta_s_tilde", "epsilon_plus", "epsilon_minus")


class DoubletFeatures(TransformerMixin, BaseEstimator):
    """Doublet shifts and overlap deficits of flattened Hamiltonians.

    Parameters
    ----------
    shift_method : {"exact", "perturbative"}
        Exact partner eigenvalues or the second-order sums.

    Each input row is a flattened centrosymmetric ``N x N`` matrix. Output
    columns are ``s+``, ``s-``, ``(s+ - s-) / 2V`` and the two sector
    deficits. Stateless apart from remembering ``N``.
    """

    def __init__(self, shift_method="exact"):
        self.shift_method = shift_method

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        n = int(round(np.sqrt(X.shape[1])))
        if n * n != X.shape[1] or n < 2 or n % 2:
            raise ValueError(f"rows must be flattened even-sized square matrices, "
                             f"got {X.shape[1]} columns")
        if self.shift_method not in ("exact", "perturbative"):
            raise ValueError(f"unknown shift_method {self.shift_method!r}")
        self.n_sites_ = n
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_sites_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        n = self.n_sites_
        out = np.empty((X.shape[0], len(FEATURE_NAMES)))
        for k, row in enumerate(X):
            blocks = decompose_symmetry(row.reshape(n, n))
            if self.shift_method == "exact":
                sp, sm = exact_shifts(blocks)
            else:
                sp, sm = perturbative_shifts(blocks)
            two_v = blocks.plus_energy - blocks.minus_energy
            out[k] = (sp, sm, (sp - sm) / two_v, *sector_deficits(blocks))
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)


class CauchyShiftDistribution(DensityMixin, BaseEstimator):
    """Cauchy model of the scaled doublet shift.

    ``fit`` takes a column of ``delta_s_tilde`` samples and estimates
    ``location_`` (median) and ``scale_`` (half interquartile range). When
    ``sigma_tilde`` is given the scale is fixed and only the location is
    fitted; ``s0_tilde`` likewise fixes the location.
    """

    def __init__(self, sigma_tilde=None, s0_tilde=None):
        self.sigma_tilde = sigma_tilde
        self.s0_tilde = s0_tilde

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_2d=False).reshape(-1)
        loc, scale = estimate_cauchy(X)
        self.location_ = float(loc if self.s0_tilde is None else self.s0_tilde)
        self.scale_ = float(scale if self.sigma_tilde is None else self.sigma_tilde)
        if not self.scale_ > 0:
            raise ValueError("fitted scale is zero; samples are degenerate")
        self.n_samples_fit_ = X.size
        return self

    def _x(self, X):
        check_is_fitted(self, "scale_")
        return check_array(X, dtype=np.float64, ensure_2d=False).reshape(-1)

    def score_samples(self, X):
        """Log-density of each sample."""
        return np.log(cauchy_pdf(self._x(X), self.scale_, self.location_))

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def cdf(self, X):
        return cauchy_cdf(self._x(X), self.scale_, self.location_)

    def sample(self, n_samples=1, random_state=None):
        check_is_fitted(self, "scale_")
        return sample_cauchy(n_samples, self.scale_, self.location_, rng=random_state)

    def efficient_fraction(self, gamma_tilde):
        check_is_fitted(self, "scale_")
        return efficient_fraction(gamma_tilde, self.scale_, self.location_)

    def efficiency_density(self, p, gamma_tilde):
        check_is_fitted(self, "scale_")
        return efficiency_density(p, gamma_tilde, self.scale_, self.location_)

    def efficiency_cdf(self, p, gamma_tilde):
        check_is_fitted(self, "scale_")
        return efficiency_cdf(p, gamma_tilde, self.scale_, self.location_)
