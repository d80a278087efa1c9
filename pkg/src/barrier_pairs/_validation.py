"""Input validation shared by the estimator and the public helpers."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .plants import PLANTS, Plant, make_plant


def check_states(X, n_states: int, name: str = "X") -> np.ndarray:
    """Return ``X`` as a finite float array of shape ``(n_samples, n_states)``."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, input_name=name)
    if X.shape[1] != n_states:
        raise ValueError(f"{name} has {X.shape[1]} columns, expected {n_states}")
    return X


def check_plant(plant, plant_params=None) -> Plant:
    """Resolve a plant given as an instance or a registry name."""
    if isinstance(plant, Plant):
        if plant_params:
            raise ValueError("plant_params only applies when plant is given by name")
        return plant
    if isinstance(plant, str):
        return make_plant(plant, **(plant_params or {}))
    raise TypeError(f"plant must be a Plant or one of {sorted(PLANTS)}, got {type(plant).__name__}")
