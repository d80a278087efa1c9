"""Quadratic barrier pairs and their min-combination."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve

PAIR_INVERSE_TOL = 1e-8


def _symmetric_inverse(Q: np.ndarray) -> np.ndarray:
    factor = cho_factor(Q, lower=True)
    P = cho_solve(factor, np.eye(Q.shape[0]))
    return 0.5 * (P + P.T)


@dataclass(frozen=True, eq=False)
class QuadraticBarrierPair:
    """``B(x) = (x - x_e)^T P (x - x_e) - 1`` with ``P = Q^{-1}``, and ``k(x) = u_e + K (x - x_e)``.

    ``log_det`` and ``margins`` carry synthesis diagnostics and are optional.
    """

    x_e: np.ndarray
    u_e: np.ndarray
    Q: np.ndarray
    K: np.ndarray
    P: np.ndarray = None
    log_det: float | None = None
    margins: dict | None = field(default=None)

    def __post_init__(self):
        x_e = np.asarray(self.x_e, dtype=float).ravel()
        u_e = np.asarray(self.u_e, dtype=float).ravel()
        Q = np.asarray(self.Q, dtype=float)
        K = np.asarray(self.K, dtype=float).reshape(len(u_e), len(x_e))
        if Q.shape != (len(x_e), len(x_e)):
            raise ValueError(f"Q must be {len(x_e)}x{len(x_e)}, got {Q.shape}")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-10 * max(1.0, np.abs(Q).max())):
            raise ValueError("Q must be symmetric")
        Q = 0.5 * (Q + Q.T)
        # Cholesky doubles as the positive-definiteness check.
        P = _symmetric_inverse(Q) if self.P is None else np.asarray(self.P, dtype=float)
        residual = np.linalg.norm(P @ Q - np.eye(len(x_e)))
        if residual > PAIR_INVERSE_TOL:
            raise ValueError(f"P is not the inverse of Q (residual {residual:.2e})")
        cho_factor(P)
        for name, value in (("x_e", x_e), ("u_e", u_e), ("Q", Q), ("K", K), ("P", P)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if self.log_det is not None:
            object.__setattr__(self, "log_det", float(self.log_det))
        if self.margins is not None:
            object.__setattr__(self, "margins", {str(k): float(v) for k, v in self.margins.items()})

    @property
    def n_states(self) -> int:
        return len(self.x_e)

    @property
    def n_inputs(self) -> int:
        return len(self.u_e)

    def barrier(self, x):
        return eval_barrier(self, x)

    def control(self, x):
        return eval_control(self, x)


def eval_barrier(pair: QuadraticBarrierPair, x):
    """Evaluate ``B(x)``; ``x`` may be batched as ``(..., n)``."""
    dx = np.asarray(x, dtype=float) - pair.x_e
    return np.einsum("...i,ij,...j->...", dx, pair.P, dx) - 1.0


def eval_control(pair: QuadraticBarrierPair, x):
    """Evaluate ``k(x) = u_e + K (x - x_e)``."""
    dx = np.asarray(x, dtype=float) - pair.x_e
    return pair.u_e + dx @ pair.K.T


@dataclass(frozen=True, eq=False)
class MinQuadraticBarrier:
    """Ordered bank of pairs combined as ``min_n B_n(x)`` with the argmin pair's control.

    ``skipped`` lists ``(x_e, reason)`` for equilibria dropped during synthesis.
    """

    pairs: tuple
    skipped: tuple = ()

    def __post_init__(self):
        pairs = tuple(self.pairs)
        if not pairs:
            raise ValueError("a min-quadratic barrier needs at least one pair")
        dims = {(p.n_states, p.n_inputs) for p in pairs}
        if len(dims) != 1:
            raise ValueError(f"pairs disagree on state/input dimensions: {sorted(dims)}")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "skipped", tuple(self.skipped))

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, index):
        return self.pairs[index]

    def __iter__(self):
        return iter(self.pairs)

    @property
    def n_states(self) -> int:
        return self.pairs[0].n_states

    @property
    def n_inputs(self) -> int:
        return self.pairs[0].n_inputs

    @cached_property
    def _stack(self):
        centers = np.stack([p.x_e for p in self.pairs])
        P = np.stack([p.P for p in self.pairs])
        u_e = np.stack([p.u_e for p in self.pairs])
        K = np.stack([p.K for p in self.pairs])
        return centers, P, u_e, K

    @property
    def centers(self) -> np.ndarray:
        return self._stack[0]

    def values(self, x) -> np.ndarray:
        """Per-pair barrier values, shape ``(..., N)``."""
        centers, P, _, _ = self._stack
        dx = np.asarray(x, dtype=float)[..., None, :] - centers
        return np.einsum("...ki,kij,...kj->...k", dx, P, dx) - 1.0

    def min_eval(self, x):
        return min_eval(self, x)

    def control(self, x):
        return combined_control(self, x)


def min_eval(bank: MinQuadraticBarrier, x):
    """Return ``(min_n B_n(x), n)`` with ties broken toward the lowest index.

    Batched input returns arrays of values and indices.
    """
    values = bank.values(x)
    index = np.argmin(values, axis=-1)
    value = np.take_along_axis(values, index[..., None], axis=-1)[..., 0]
    if value.ndim == 0:
        return float(value), int(index)
    return value, index


def combined_control(bank: MinQuadraticBarrier, x):
    """Control of the argmin pair, returned together with its index."""
    _, index = min_eval(bank, x)
    centers, _, u_e, K = bank._stack
    x = np.asarray(x, dtype=float)
    dx = x - centers[index]
    u = u_e[index] + np.einsum("...ij,...j->...i", K[index], dx)
    return u, index
