"""scikit-learn style sketching transformers.

``fit`` draws a random measurement operator for the feature dimension of
``X`` and ``transform`` applies it row by row.  Both accept complex input, so
validation is done here rather than through ``check_array`` (which rejects
complex dtypes).
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_batch, check_positive_int, check_random_state
from .groups import parse_group
from .measurement import draw_operator, gaussian_operator
from .rip import monte_carlo_rip
from .sparsity import CanonicalL1, parse_model

__all__ = ["GroupSketch", "GaussianSketch"]


def _check_X(X, n_features=None):
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("input contains NaN or infinity")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, sketch was fitted with {n_features}")
    return as_batch(X, X.shape[1])


class _SketchBase(TransformerMixin, BaseEstimator):
    def _fit_shape(self, X):
        X = _check_X(X)
        self.n_features_in_ = X.shape[1]
        return X

    def transform(self, X):
        """Measurements of each row of ``X``, shape (n_samples, m * block_dim)."""
        check_is_fitted(self, "operator_")
        X = _check_X(X, self.n_features_in_)
        return X @ self.components_.T

    def restricted_isometry(self, s=1, model=None, trials=1000, random_state=None):
        """Monte Carlo lower bound on the RIP deviation of the fitted operator."""
        check_is_fitted(self, "operator_")
        model = CanonicalL1(self.n_features_in_) if model is None else parse_model(model)
        return monte_carlo_rip(self.operator_, model, s, trials, rng=random_state)


class GroupSketch(_SketchBase):
    """A = (1/sqrt(m)) (u sigma(g_j))_j with Haar-random group elements.

    Parameters
    ----------
    group : str, dict or FiniteGroup
        Group acting on the feature space, e.g. ``"hw:64"``.
    instrument : str, dict or array
        ``"ones"``, ``"gaussian[:SEED]"``, ``"gaussian-raw[:SEED]"``, ``"identity"`` or an
        explicit row/matrix.
    n_measurements : int
        Number m of sampled group elements.
    random_state : int, Generator or None
    """

    def __init__(self, group="hw:8", instrument="ones", n_measurements=8, random_state=None):
        self.group = group
        self.instrument = instrument
        self.n_measurements = n_measurements
        self.random_state = random_state

    def fit(self, X, y=None):
        X = self._fit_shape(X)
        group = parse_group(self.group)
        if group.N != self.n_features_in_:
            raise ValueError(f"group acts on C^{group.N} but X has {self.n_features_in_} features")
        check_positive_int(self.n_measurements, "n_measurements")
        rng = check_random_state(self.random_state)
        self.operator_ = draw_operator(group, self.instrument, self.n_measurements, rng)
        self.components_ = self.operator_.to_dense()
        return self


class GaussianSketch(_SketchBase):
    """Dense sketch with i.i.d. N(0, 1/m) entries."""

    def __init__(self, n_measurements=8, random_state=None):
        self.n_measurements = n_measurements
        self.random_state = random_state

    def fit(self, X, y=None):
        X = self._fit_shape(X)
        m = check_positive_int(self.n_measurements, "n_measurements")
        self.components_ = gaussian_operator(self.n_features_in_, m, self.random_state)
        self.operator_ = self.components_
        return self
