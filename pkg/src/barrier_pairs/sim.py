"""Fixed-step closed-loop simulation with constraint monitoring."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .barrier import MinQuadraticBarrier, combined_control, min_eval
from .exceptions import NonFinite, StartOutsideSafeSet
from .plants import InvertedPendulum, Plant
from .supervisor import DEFAULT_EPS_HI, DEFAULT_EPS_LO, Mode, SupervisorState, supervisor_step

DEFAULT_STEP = 1e-3
SANITY_NORM = 1e6
TRACKER_KP = 25.0
TRACKER_KD = 10.0


def integrate_step(plant: Plant, x, u, h: float):
    """One classical RK4 step with ``u`` held over the step; ``x`` may be batched."""
    if not h > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    k1 = plant.dynamics(x, u)
    k2 = plant.dynamics(x + 0.5 * h * k1, u)
    k3 = plant.dynamics(x + 0.5 * h * k2, u)
    k4 = plant.dynamics(x + h * k3, u)
    x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)) or np.any(np.linalg.norm(x_next, axis=-1) > SANITY_NORM):
        raise NonFinite(f"state left the sanity box after a step from {x.tolist()}")
    return x_next


def tracking_control_pendulum(plant: InvertedPendulum, x, r, kp=TRACKER_KP, kd=TRACKER_KD):
    """Feedback-linearizing PD tracker; the output is not saturated."""
    theta, theta_dot = x[0], x[1]
    return np.array(
        [plant.inertia * (kp * (r - theta) - kd * theta_dot) - plant.m * plant.g * plant.l * math.sin(theta)]
    )


@dataclass(frozen=True)
class Scenario:
    """Reference-tracking run: piecewise-linear reference through ``knots``.

    ``knots`` are ``(time, value)`` pairs with strictly increasing times; the
    reference holds its end values outside the knot range.
    """

    name: str
    plant: str
    knots: tuple
    x0: tuple
    horizon: float
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.horizon >= self.step:
            raise ValueError("horizon must be at least one step")
        times = [t for t, _ in self.knots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("reference knot times must be strictly increasing")

    def reference(self, t):
        times, values = zip(*self.knots)
        return float(np.interp(t, times, values))

    def out_of_range_windows(self, limit):
        """Maximal time windows over which ``|r(t)| > limit`` on the step grid."""
        t = np.arange(int(round(self.horizon / self.step)) + 1) * self.step
        mask = np.abs([self.reference(s) for s in t]) > limit
        windows = []
        for key, group in itertools.groupby(zip(t, mask), key=lambda p: p[1]):
            group = list(group)
            if key:
                windows.append((group[0][0], group[-1][0]))
        return windows


# Step-and-hold / ramp references; transitions span a single simulation step.
PENDULUM_SCENARIOS = {
    "position": Scenario(
        "position",
        "pendulum",
        knots=((0.0, 0.0), (0.5, 0.0), (0.501, 1.5), (5.0, 1.5), (5.001, 0.0)),
        x0=(0.0, 0.0),
        horizon=8.0,
    ),
    "velocity": Scenario(
        "velocity",
        "pendulum",
        knots=((0.0, -0.6), (0.5, -0.6), (0.8, 0.6), (3.0, 0.6), (3.3, -0.6)),
        x0=(-0.6, 0.0),
        horizon=6.0,
    ),
    "no-return": Scenario(
        "no-return",
        "pendulum",
        knots=((0.0, 0.0), (0.5, 0.0), (0.501, 0.99), (5.0, 0.99), (5.001, 0.0)),
        x0=(0.0, 0.0),
        horizon=8.0,
    ),
}


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    u_applied: np.ndarray
    u_requested: np.ndarray
    barrier_values: np.ndarray
    modes: np.ndarray
    active_indices: np.ndarray

    def __post_init__(self):
        lengths = {
            len(self.times),
            len(self.states),
            len(self.u_applied),
            len(self.u_requested),
            len(self.barrier_values),
            len(self.modes),
            len(self.active_indices),
        }
        if len(lengths) != 1:
            raise ValueError("trajectory sequences must share a length")

    def __len__(self):
        return len(self.times)

    def to_csv(self, path) -> None:
        """Write one row per sample; ``active_index`` is empty while transparent."""
        n, m = self.states.shape[1], self.u_applied.shape[1]
        header = (
            ["t"]
            + [f"x{i}" for i in range(n)]
            + [f"u_req{j}" for j in range(m)]
            + [f"u_app{j}" for j in range(m)]
            + ["B", "mode", "active_index"]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for k in range(len(self)):
                index = self.active_indices[k]
                writer.writerow(
                    [_fmt(self.times[k])]
                    + [_fmt(v) for v in self.states[k]]
                    + [_fmt(v) for v in self.u_requested[k]]
                    + [_fmt(v) for v in self.u_applied[k]]
                    + [_fmt(self.barrier_values[k]), int(self.modes[k]), "" if index < 0 else int(index)]
                )


def _fmt(value) -> str:
    return format(float(value), ".17g")


@dataclass
class ViolationReport:
    """Constraint monitor output; requested-input violations are logged, not fatal."""

    state_violations: int = 0
    input_violations: int = 0
    requested_input_violations: int = 0
    switch_count: int = 0
    max_barrier: float = -math.inf
    events: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.state_violations + self.input_violations


class _Recorder:
    def __init__(self, n_samples, n, m):
        self.t = np.empty(n_samples)
        self.x = np.empty((n_samples, n))
        self.u_req = np.empty((n_samples, m))
        self.u_app = np.empty((n_samples, m))
        self.b = np.empty(n_samples)
        self.mode = np.empty(n_samples, dtype=int)
        self.index = np.empty(n_samples, dtype=int)
        self.k = 0

    def add(self, t, x, u_req, u_app, b, mode, index):
        k = self.k
        self.t[k], self.x[k], self.u_req[k], self.u_app[k] = t, x, u_req, u_app
        self.b[k], self.mode[k], self.index[k] = b, mode, index
        self.k += 1

    def trajectory(self):
        k = self.k
        return Trajectory(
            self.t[:k], self.x[:k], self.u_app[:k], self.u_req[:k], self.b[:k], self.mode[:k], self.index[:k]
        )


def run_scenario(
    scenario: Scenario,
    bank: MinQuadraticBarrier,
    plant: InvertedPendulum,
    eps_hi: float = DEFAULT_EPS_HI,
    eps_lo: float = DEFAULT_EPS_LO,
    gains=(TRACKER_KP, TRACKER_KD),
    record_every: int = 1,
    lookahead: bool = True,
):
    """Simulate tracker + supervisor + saturated plant; return ``(Trajectory, ViolationReport)``.

    With ``lookahead`` the supervisor predicts the next sample with the same
    integrator, which keeps the sampled barrier below ``eps_hi``.
    """
    state = SupervisorState(eps_hi=eps_hi, eps_lo=eps_lo)
    x = np.asarray(scenario.x0, dtype=float)
    b0, _ = min_eval(bank, x)
    if b0 > eps_lo:
        raise StartOutsideSafeSet(f"initial min-barrier {b0:.4g} exceeds eps_lo={eps_lo}")
    h = scenario.step
    n_steps = int(round(scenario.horizon / h))
    rec = _Recorder(n_steps // record_every + 1, plant.n_states, plant.n_inputs)
    report = ViolationReport()
    kp, kd = gains

    def predict(x, u):
        return integrate_step(plant, x, plant.saturate(u), h)

    for k in range(n_steps + 1):
        t = k * h
        u_hat = tracking_control_pendulum(plant, x, scenario.reference(t), kp, kd)
        previous = state.mode
        u, state = supervisor_step(state, bank, x, u_hat, predict if lookahead else None)
        u_app = plant.saturate(u)
        b, _ = min_eval(bank, x)
        report.max_barrier = max(report.max_barrier, b)
        if state.mode is not previous:
            report.switch_count += 1
        _monitor(report, plant, t, x, u_hat, u_app)
        if k % record_every == 0:
            index = -1 if state.active_index is None else state.active_index
            rec.add(t, x, u_hat, u_app, b, int(state.mode), index)
        if k < n_steps:
            x = integrate_step(plant, x, u_app, h)
    return rec.trajectory(), report


def _monitor(report, plant, t, x, u_req, u_app, max_events=20):
    if plant.state_violation(x) > 0:
        report.state_violations += 1
        if len(report.events) < max_events:
            report.events.append(("state", t, x.tolist()))
    if plant.input_violation(u_app) > 0:
        report.input_violations += 1
        if len(report.events) < max_events:
            report.events.append(("input", t, u_app.tolist()))
    if plant.input_violation(u_req) > 0:
        report.requested_input_violations += 1


def _outermost_scale(bank, origin, direction, level, s_max, scan=400, iters=60):
    """Largest ``s`` on a scan of the ray with min-barrier <= level, refined by bisection."""
    s = np.linspace(0.0, s_max, scan + 1)
    values, _ = min_eval(bank, origin + s[:, None] * direction)
    inside = np.flatnonzero(values <= level)
    last = inside[-1]
    if last == scan:
        return s_max
    lo, hi = s[last], s[last + 1]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if min_eval(bank, origin + mid * direction)[0] <= level:
            lo = mid
        else:
            hi = mid
    return lo


def edge_start_states(bank: MinQuadraticBarrier, plant: Plant, count=30, level=DEFAULT_EPS_LO):
    """Start states on the extreme edge of the safe set in every coordinate plane.

    For each plane, ``count`` evenly spaced directions are lifted to the full
    state (zeros elsewhere) and pushed outward until the min-barrier reaches
    ``level``. Rays start at the origin when it lies in the safe set, otherwise
    at the bank centre nearest the origin.
    """
    n = plant.n_states
    origin = np.zeros(n)
    if min_eval(bank, origin)[0] > level:
        origin = bank.centers[np.argmin(np.linalg.norm(bank.centers, axis=1))]
    s_max = 2.0 * float(np.max(plant.state_bounds)) + float(np.max(np.abs(bank.centers)))
    starts = {}
    for i, j in itertools.combinations(range(n), 2):
        points = []
        for phi in 2.0 * np.pi * np.arange(count) / count:
            direction = np.zeros(n)
            direction[i], direction[j] = np.cos(phi), np.sin(phi)
            points.append(origin + _outermost_scale(bank, origin, direction, level, s_max) * direction)
        starts[(i, j)] = np.array(points)
    return starts


def decay_horizon(lam: float, start_level=DEFAULT_EPS_LO, target_level=-0.99) -> float:
    """Time for ``B + 1`` to decay from ``1 + start_level`` to ``1 + target_level`` at rate ``lam``."""
    return math.log((1.0 + start_level) / (1.0 + target_level)) / lam


def simulate_barrier_control(bank, plant, x0, horizon, h=DEFAULT_STEP, record_every=1):
    """Integrate a batch of states under ``u = k(x)`` alone.

    Returns ``[(Trajectory, ViolationReport), ...]``, one per start state.
    Constraints and ``max_barrier`` are monitored at every step, including
    steps skipped by ``record_every``.
    """
    x = np.atleast_2d(np.asarray(x0, dtype=float)).copy()
    batch = len(x)
    n_steps = int(round(horizon / h))
    centers, _, u_e, K = bank._stack
    recorders = [_Recorder(n_steps // record_every + 2, plant.n_states, plant.n_inputs) for _ in range(batch)]
    reports = [ViolationReport() for _ in range(batch)]
    state_hits = np.zeros(batch, dtype=int)
    input_hits = np.zeros(batch, dtype=int)
    requested_hits = np.zeros(batch, dtype=int)
    max_barrier = np.full(batch, -np.inf)
    rows = np.arange(batch)
    for k in range(n_steps + 1):
        values = bank.values(x)
        index = np.argmin(values, axis=-1)
        b = values[rows, index]
        u = u_e[index] + np.einsum("bij,bj->bi", K[index], x - centers[index])
        u_app = plant.saturate(u)
        max_barrier = np.maximum(max_barrier, b)
        state_hits += plant.state_violation(x) > 0
        input_hits += plant.input_violation(u_app) > 0
        requested_hits += plant.input_violation(u) > 0
        if k % record_every == 0 or k == n_steps:
            for r in range(batch):
                recorders[r].add(k * h, x[r], u[r], u_app[r], b[r], int(Mode.SAFETY), index[r])
        if k < n_steps:
            x = integrate_step(plant, x, u_app, h)
    out = []
    for r in range(batch):
        report = reports[r]
        report.state_violations = int(state_hits[r])
        report.input_violations = int(input_hits[r])
        report.requested_input_violations = int(requested_hits[r])
        report.max_barrier = float(max_barrier[r])
        out.append((recorders[r].trajectory(), report))
    return out


def edge_trajectories(
    bank: MinQuadraticBarrier,
    plant: Plant,
    count_per_projection: int = 30,
    horizon: float | None = None,
    lam: float = 0.1,
    h: float = DEFAULT_STEP,
    level: float = DEFAULT_EPS_LO,
    record_every: int = 1,
):
    """Trajectories from the projected edge of the safe set under the barrier-pair control only.

    Returns a dict mapping each coordinate pair ``(i, j)`` to its list of
    ``(Trajectory, ViolationReport)``. The default horizon is the time the guaranteed decay rate
    ``lam`` needs to bring the barrier from ``level`` to -0.99, plus one second.
    """
    if horizon is None:
        horizon = math.ceil(decay_horizon(lam, level)) + 1.0
    starts = edge_start_states(bank, plant, count_per_projection, level)
    keys = list(starts)
    batch = np.concatenate([starts[key] for key in keys])
    runs = simulate_barrier_control(bank, plant, batch, horizon, h, record_every)
    out = {}
    for i, key in enumerate(keys):
        out[key] = runs[i * count_per_projection : (i + 1) * count_per_projection]
    return out


def monitor_trajectory(plant: Plant, traj: Trajectory) -> ViolationReport:
    """Count state and applied-input violations over a recorded trajectory."""
    report = ViolationReport()
    report.state_violations = int(np.count_nonzero(plant.state_violation(traj.states) > 0))
    report.input_violations = int(np.count_nonzero(plant.input_violation(traj.u_applied) > 0))
    report.requested_input_violations = int(np.count_nonzero(plant.input_violation(traj.u_requested) > 0))
    report.switch_count = int(np.count_nonzero(np.diff(traj.modes)))
    return report
