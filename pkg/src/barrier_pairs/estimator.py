"""Estimator-style wrapper around bank synthesis."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_plant, check_states
from .barrier import combined_control, min_eval
from .synthesis import SynthesisConfig, synthesize_bank


class BarrierPairSynthesizer(TransformerMixin, BaseEstimator):
    """Fit a min-quadratic barrier bank to a set of equilibrium states.

    ``fit(X)`` synthesizes one barrier pair per row of ``X``. After fitting,
    ``decision_function`` returns the min-barrier value, ``predict`` the
    combined control and ``transform`` the per-pair barrier values.

    Parameters
    ----------
    plant : str or Plant
        Plant instance or registry name (``"pendulum"``, ``"springmass"``).
    plant_params : dict, optional
        Parameter overrides when ``plant`` is a name.
    epsilon, lam, max_outer_iters, volume_rel_tol, verify_margin, strategy
        Forwarded to :class:`SynthesisConfig`.
    """

    def __init__(
        self,
        plant="pendulum",
        plant_params=None,
        epsilon=1e-6,
        lam=0.1,
        max_outer_iters=20,
        volume_rel_tol=1e-4,
        verify_margin=0.0,
        strategy="sequential",
    ):
        self.plant = plant
        self.plant_params = plant_params
        self.epsilon = epsilon
        self.lam = lam
        self.max_outer_iters = max_outer_iters
        self.volume_rel_tol = volume_rel_tol
        self.verify_margin = verify_margin
        self.strategy = strategy

    def _config(self) -> SynthesisConfig:
        return SynthesisConfig(
            epsilon=self.epsilon,
            lam=self.lam,
            max_outer_iters=self.max_outer_iters,
            volume_rel_tol=self.volume_rel_tol,
            verify_margin=self.verify_margin,
            strategy=self.strategy,
        )

    def fit(self, X, y=None):
        plant = check_plant(self.plant, self.plant_params)
        X = check_states(X, plant.n_states)
        config = self._config()
        self.plant_ = plant
        self.config_ = config
        self.bank_ = synthesize_bank(plant, X, config)
        self.skipped_ = self.bank_.skipped
        self.n_features_in_ = plant.n_states
        self.n_pairs_ = len(self.bank_)
        return self

    def _checked(self, X):
        check_is_fitted(self, "bank_")
        return check_states(X, self.n_features_in_)

    def transform(self, X):
        """Per-pair barrier values, shape ``(n_samples, n_pairs)``."""
        X = self._checked(X)
        return self.bank_.values(X)

    def decision_function(self, X):
        """Min-barrier value for each row; ``<= 0`` inside the certified safe set."""
        X = self._checked(X)
        values, _ = min_eval(self.bank_, X)
        return np.asarray(values)

    def predict(self, X):
        """Combined barrier-pair control for each row, shape ``(n_samples, n_inputs)``."""
        X = self._checked(X)
        u, _ = combined_control(self.bank_, X)
        return u

    def active_pair(self, X):
        """Index of the pair attaining the min-barrier for each row."""
        X = self._checked(X)
        _, index = min_eval(self.bank_, X)
        return np.asarray(index)
