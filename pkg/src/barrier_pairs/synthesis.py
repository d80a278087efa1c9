"""Determinant-maximizing LMI synthesis of quadratic barrier pairs.

Each equilibrium's LDI yields a program in ``Q = Q^T`` and ``Y = K Q``::

    maximize    log det Q
    subject to  Q >= eps I
                a_i^T Q a_i <= alpha_i^2
                [[Q, Y^T b_i], [b_i^T Y, beta_i^2]] >= 0
                A_l Q + Q A_l^T + B_l Y + Y^T B_l^T + eps I + lam Q <= 0

Outer iterations start from ``trace(Q)`` (weight ``W = I``) and then, in
whitened coordinates ``D = L^{-1} (Q - Q_k) L^{-T}`` with ``Q_k = L L^T``,
maximize a local model of the log det: ``trace(D)`` (the linearization with
``W = Q_k^{-1}``) for ``"linearized"``, or ``trace(D) - |D|_F^2 / 2`` (its
second-order Taylor model) for ``"sequential"``. Each candidate is followed
by an exact line search on the segment from ``Q_k``, so every iterate is
feasible and the volume never decreases. ``"logdet"`` hands the concave
objective to the conic solver directly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from scipy.optimize import minimize_scalar

from .barrier import MinQuadraticBarrier, QuadraticBarrierPair
from .exceptions import (
    BarrierPairError,
    EmptyBank,
    Infeasible,
    SolverStalled,
    VerificationFailed,
)
from .ldi import PolytopicLDI, linearize

logger = logging.getLogger(__name__)

STRATEGIES = ("sequential", "linearized", "logdet")


@dataclass(frozen=True)
class SynthesisConfig:
    """Tolerances and solver settings for the barrier-pair program.

    ``backoff`` tightens every constraint handed to the conic solver so that
    certificates still verify with zero margin after solver round-off.
    """

    epsilon: float = 1e-6
    lam: float = 0.1
    max_outer_iters: int = 20
    volume_rel_tol: float = 1e-4
    verify_margin: float = 0.0
    backoff: float = 1e-7
    strategy: str = "sequential"
    solver: str = "CLARABEL"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if self.backoff < 0:
            raise ValueError("backoff must be non-negative")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "lambda": self.lam,
            "max_outer_iters": self.max_outer_iters,
            "volume_rel_tol": self.volume_rel_tol,
            "verify_margin": self.verify_margin,
            "backoff": self.backoff,
            "strategy": self.strategy,
            "solver": self.solver,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SynthesisConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown synthesis options: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Certificate:
    """Solver output ``(Q, Y)`` with its objective and outer-loop record."""

    Q: np.ndarray
    Y: np.ndarray
    objective: float
    margins: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    converged: bool = True

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        self.Q = 0.5 * (Q + Q.T)
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=float))


def _log_det(Q) -> float:
    sign, value = np.linalg.slogdet(Q)
    return value if sign > 0 else -np.inf


def constraint_margins(Q, Y, ldi: PolytopicLDI, cfg: SynthesisConfig) -> dict:
    """Slack of every program constraint, computed by direct eigenvalue evaluation.

    Keys follow program order: ``Q>=epsI``, ``state[i]``, ``input[i]``, ``decrease[l]``.
    """
    Q = np.asarray(Q, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Q.shape[0]
    I = np.eye(n)
    margins = {"Q>=epsI": np.linalg.eigvalsh(Q).min() - cfg.epsilon}
    for i, (a, alpha) in enumerate(zip(ldi.state_rows, ldi.state_bounds)):
        margins[f"state[{i}]"] = alpha**2 - a @ Q @ a
    for i, (b, beta) in enumerate(zip(ldi.input_rows, ldi.input_bounds)):
        v = Y.T @ b
        block = np.block([[Q, v[:, None]], [v[None, :], np.array([[beta**2]])]])
        margins[f"input[{i}]"] = np.linalg.eigvalsh(block).min()
    for l, (A, B) in enumerate(zip(ldi.vertex_A, ldi.vertex_B)):
        M = A @ Q + Q @ A.T + B @ Y + Y.T @ B.T + cfg.epsilon * I + cfg.lam * Q
        margins[f"decrease[{l}]"] = -np.linalg.eigvalsh(0.5 * (M + M.T)).max()
    return {k: float(v) for k, v in margins.items()}


def verify_certificate(cert: Certificate, ldi: PolytopicLDI, cfg: SynthesisConfig) -> dict:
    """Recheck a certificate independently of the solver.

    Returns the margin report; raises VerificationFailed naming the first
    constraint whose margin falls below ``cfg.verify_margin``.
    """
    Q = np.asarray(cert.Q, dtype=float)
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-10 * max(1.0, np.abs(Q).max())):
        raise VerificationFailed("symmetry", {"symmetry": -np.abs(Q - Q.T).max()})
    margins = constraint_margins(Q, cert.Y, ldi, cfg)
    failing = {k: v for k, v in margins.items() if not v >= cfg.verify_margin}
    if failing:
        raise VerificationFailed(next(iter(failing)), failing)
    return margins


def extract_gain(cert: Certificate) -> np.ndarray:
    """Recover ``K = Y Q^{-1}``."""
    Q = cert.Q
    Y = np.atleast_2d(cert.Y)
    K = np.linalg.solve(Q, Y.T).T
    residual = np.linalg.norm(K @ Q - Y)
    if residual > 1e-8 * max(1.0, np.linalg.norm(Y)):
        raise np.linalg.LinAlgError(f"gain extraction residual {residual:.2e}")
    return K


class _Program:
    """Constraint set of the barrier-pair program for a single LDI."""

    def __init__(self, ldi: PolytopicLDI, cfg: SynthesisConfig):
        n, m = ldi.n_states, ldi.n_inputs
        d = cfg.backoff
        I = np.eye(n)
        self.cfg = cfg
        self.Q = cp.Variable((n, n), symmetric=True)
        self.Y = cp.Variable((m, n))
        Q, Y = self.Q, self.Y
        constraints = [Q >> (cfg.epsilon + d) * I]
        for a, alpha in zip(ldi.state_rows, ldi.state_bounds):
            constraints.append(a @ Q @ a <= alpha**2 - d)
        for b, beta in zip(ldi.input_rows, ldi.input_bounds):
            v = cp.reshape(Y.T @ b, (n, 1), order="C")
            block = cp.bmat([[Q, v], [v.T, np.array([[beta**2]])]])
            constraints.append(0.5 * (block + block.T) >> d * np.eye(n + 1))
        for A, B in zip(ldi.vertex_A, ldi.vertex_B):
            M = A @ Q + Q @ A.T + B @ Y + Y.T @ B.T + cfg.epsilon * I + cfg.lam * Q
            constraints.append(0.5 * (M + M.T) << -d * I)
        self.constraints = constraints

    def local_objective(self, Q_k):
        L_inv = np.linalg.inv(np.linalg.cholesky(Q_k))
        D = L_inv @ (self.Q - Q_k) @ L_inv.T
        if self.cfg.strategy == "sequential":
            return cp.trace(D) - 0.5 * cp.sum_squares(D)
        return cp.trace(D)

    def solve(self, objective):
        problem = cp.Problem(cp.Maximize(objective), self.constraints)
        try:
            problem.solve(solver=self.cfg.solver)
        except cp.SolverError as exc:
            raise SolverStalled(f"conic solver failed: {exc}") from exc
        status = problem.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            raise Infeasible(f"barrier-pair program is {status}")
        if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or self.Q.value is None:
            raise SolverStalled(f"conic solver returned status {status!r}")
        Q = self.Q.value
        return 0.5 * (Q + Q.T), np.array(self.Y.value)


def _try_verify(Q, Y, ldi, cfg):
    try:
        return verify_certificate(Certificate(Q, Y, _log_det(Q)), ldi, cfg)
    except VerificationFailed as exc:
        logger.debug("iterate rejected: %s", exc)
        return None


def _line_search(Q0, Y0, Q1, Y1):
    """Best step ``t`` in [0, 1] for log det along the segment; log det is concave in t."""
    def neg(t):
        return -_log_det(Q0 + t * (Q1 - Q0))

    res = minimize_scalar(neg, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
    t = 1.0 if neg(1.0) <= res.fun else float(res.x)
    return Q0 + t * (Q1 - Q0), Y0 + t * (Y1 - Y0)


def solve_certificate(ldi: PolytopicLDI, cfg: SynthesisConfig | None = None) -> Certificate:
    """Run the determinant-maximization strategy and return a verified certificate.

    ``Certificate.history`` holds the accepted log det after every outer
    iteration and is non-decreasing.
    """
    cfg = cfg or SynthesisConfig()
    program = _Program(ldi, cfg)
    if cfg.strategy == "logdet":
        Q, Y = program.solve(cp.log_det(program.Q))
        margins = _try_verify(Q, Y, ldi, cfg)
        if margins is None:
            raise SolverStalled("log-det solution failed verification")
        value = _log_det(Q)
        return Certificate(Q, Y, value, margins, [value], True)

    Q, Y = program.solve(cp.trace(program.Q))
    margins = _try_verify(Q, Y, ldi, cfg)
    best = None if margins is None else (Q, Y, margins)
    history = [] if best is None else [_log_det(Q)]
    converged = False
    for _ in range(cfg.max_outer_iters - 1):
        Q_k = best[0] if best else Q
        Q_new, Y_new = program.solve(program.local_objective(Q_k))
        candidate = (Q_new, Y_new) if best is None else _line_search(best[0], best[1], Q_new, Y_new)
        margins = _try_verify(*candidate, ldi, cfg)
        if margins is None:
            Q = candidate[0]
            continue
        value = _log_det(candidate[0])
        if best is None:
            best, history = (*candidate, margins), [value]
            continue
        previous = history[-1]
        if value >= previous:
            best = (*candidate, margins)
            history.append(value)
        else:
            history.append(previous)
        if value - previous < cfg.volume_rel_tol * max(1.0, abs(previous)):
            converged = True
            break
    if best is None:
        raise SolverStalled(f"no verified iterate after {cfg.max_outer_iters} outer iterations")
    if not converged:
        logger.warning(
            "volume maximization stopped after %d iterations above relative tolerance %g",
            cfg.max_outer_iters,
            cfg.volume_rel_tol,
        )
    Q, Y, margins = best
    return Certificate(Q, Y, history[-1], margins, history, converged)


def synthesize_barrier_pair(ldi: PolytopicLDI, cfg: SynthesisConfig | None = None) -> QuadraticBarrierPair:
    """Solve the LMI subproblem for ``ldi`` and package the result as a barrier pair."""
    cfg = cfg or SynthesisConfig()
    cert = solve_certificate(ldi, cfg)
    margins = verify_certificate(cert, ldi, cfg)
    return QuadraticBarrierPair(
        x_e=ldi.x_e,
        u_e=ldi.u_e,
        Q=cert.Q,
        K=extract_gain(cert),
        log_det=cert.objective,
        margins=margins,
    )


def synthesize_bank(plant, equilibria, cfg: SynthesisConfig | None = None) -> MinQuadraticBarrier:
    """Synthesize one pair per equilibrium state, skipping infeasible ones.

    Pairs keep the input order. Skipped equilibria are recorded on the
    returned bank's ``skipped`` attribute as ``(x_e, reason)``.
    """
    cfg = cfg or SynthesisConfig()
    equilibria = np.atleast_2d(np.asarray(equilibria, dtype=float))
    if equilibria.size == 0:
        raise ValueError("at least one equilibrium is required")
    pairs, skipped = [], []
    for x_e in equilibria:
        try:
            pair = synthesize_barrier_pair(linearize(plant, x_e), cfg)
        except BarrierPairError as exc:
            reason = f"{type(exc).__name__}: {exc}"
            logger.info("equilibrium=%s status=skipped reason=%r", x_e.tolist(), reason)
            skipped.append((tuple(x_e.tolist()), reason))
            continue
        logger.info(
            "equilibrium=%s status=feasible log_det=%.6f min_margin=%.3e",
            x_e.tolist(),
            pair.log_det,
            min(pair.margins.values()),
        )
        pairs.append(pair)
    if not pairs:
        raise EmptyBank(f"none of {len(equilibria)} equilibria produced a feasible pair")
    return MinQuadraticBarrier(tuple(pairs), tuple(skipped))
