"""Hysteretic hybrid safety supervisor.

In ``TRANSPARENT`` mode the requested input passes through untouched. Once
the min-barrier reaches ``eps_hi`` the supervisor switches to ``SAFETY`` and
applies the barrier-pair control, re-selecting the argmin pair every step,
until the barrier falls back to ``eps_lo``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .barrier import MinQuadraticBarrier, combined_control, min_eval

DEFAULT_EPS_HI = -1e-3
DEFAULT_EPS_LO = -2e-3


class Mode(enum.IntEnum):
    TRANSPARENT = 0
    SAFETY = 1


@dataclass(frozen=True)
class SupervisorState:
    mode: Mode = Mode.TRANSPARENT
    eps_hi: float = DEFAULT_EPS_HI
    eps_lo: float = DEFAULT_EPS_LO
    active_index: int | None = None

    def __post_init__(self):
        if not 0.0 >= self.eps_hi > self.eps_lo > -1.0:
            raise ValueError(
                f"thresholds must satisfy 0 >= eps_hi > eps_lo > -1, got {self.eps_hi}, {self.eps_lo}"
            )
        object.__setattr__(self, "mode", Mode(self.mode))
        if (self.active_index is not None) != (self.mode is Mode.SAFETY):
            raise ValueError("active_index must be set exactly when in SAFETY mode")


def supervisor_step(state: SupervisorState, bank: MinQuadraticBarrier, x, u_hat, predict=None):
    """Advance the supervisor one sample and return ``(u, new_state)``.

    The mode transition is decided first from ``min_eval(bank, x)``; the
    output then follows the new mode.

    ``predict(x, u)``, when given, returns the next sampled state. A
    transparent sample whose predicted successor would reach ``eps_hi`` is
    then served in SAFETY mode instead, so a held input cannot carry the
    state across the threshold between samples.
    """
    u_hat = np.asarray(u_hat, dtype=float)
    if not np.all(np.isfinite(u_hat)):
        raise ValueError("requested input must be finite")
    value, _ = min_eval(bank, x)
    mode = state.mode
    if mode is Mode.TRANSPARENT and value >= state.eps_hi:
        mode = Mode.SAFETY
    elif mode is Mode.SAFETY and value <= state.eps_lo:
        mode = Mode.TRANSPARENT
    if mode is Mode.TRANSPARENT and predict is not None:
        if min_eval(bank, predict(x, u_hat))[0] >= state.eps_hi:
            mode = Mode.SAFETY
    if mode is Mode.TRANSPARENT:
        return u_hat, replace(state, mode=mode, active_index=None)
    u, index = combined_control(bank, x)
    return u, replace(state, mode=mode, active_index=int(index))


def safe_set_membership(bank: MinQuadraticBarrier, x, eps_hi: float = DEFAULT_EPS_HI) -> bool:
    """Whether ``x`` lies in the closed set ``{min-barrier <= eps_hi}``."""
    value, _ = min_eval(bank, x)
    return bool(value <= eps_hi)
