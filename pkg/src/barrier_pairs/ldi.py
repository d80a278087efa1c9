"""Conservative polytopic LDI models of a plant around an equilibrium."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .exceptions import InfeasibleEquilibrium, InvalidRegion
from .plants import DoubleSpringMass, InvertedPendulum, Plant, equilibrium_input

ALPHA_MIN = 1e-3
ZETA_GRID_POINTS = 10001
ZETA_MARGIN = 1e-6
PENDULUM_ALPHA_CAP = 0.25


@dataclass(frozen=True, eq=False)
class PolytopicLDI:
    """``xdot in Co{A_l (x - x_e) + B_l (u - u_e)}`` on a symmetric validity box.

    The box is ``|a_i^T (x - x_e)| <= alpha_i`` for rows of ``state_rows`` and
    ``|b_i^T (u - u_e)| <= beta_i`` for rows of ``input_rows``.
    """

    vertex_A: tuple
    vertex_B: tuple
    x_e: np.ndarray
    u_e: np.ndarray
    state_rows: np.ndarray
    state_bounds: np.ndarray
    input_rows: np.ndarray
    input_bounds: np.ndarray

    def __post_init__(self):
        A = tuple(np.array(a, dtype=float) for a in self.vertex_A)
        B = tuple(np.array(b, dtype=float) for b in self.vertex_B)
        if not A or len(A) != len(B):
            raise ValueError("vertex_A and vertex_B must be nonempty and of equal length")
        n, m = B[0].shape
        if any(a.shape != (n, n) for a in A) or any(b.shape != (n, m) for b in B):
            raise ValueError("inconsistent vertex matrix shapes")
        fields = {
            "vertex_A": A,
            "vertex_B": B,
            "x_e": np.asarray(self.x_e, dtype=float).reshape(n),
            "u_e": np.asarray(self.u_e, dtype=float).reshape(m),
            "state_rows": np.atleast_2d(np.asarray(self.state_rows, dtype=float)),
            "state_bounds": np.atleast_1d(np.asarray(self.state_bounds, dtype=float)),
            "input_rows": np.atleast_2d(np.asarray(self.input_rows, dtype=float)),
            "input_bounds": np.atleast_1d(np.asarray(self.input_bounds, dtype=float)),
        }
        for name, value in fields.items():
            object.__setattr__(self, name, value)
        if self.state_rows.shape != (len(self.state_bounds), n):
            raise ValueError("state_rows must be (n_a, n) matching state_bounds")
        if self.input_rows.shape != (len(self.input_bounds), m):
            raise ValueError("input_rows must be (n_b, m) matching input_bounds")
        if np.any(self.state_bounds <= 0) or np.any(self.input_bounds <= 0):
            raise InvalidRegion("all validity widths must be positive")

    @property
    def n_states(self) -> int:
        return self.vertex_B[0].shape[0]

    @property
    def n_inputs(self) -> int:
        return self.vertex_B[0].shape[1]

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_A)

    def vertex_predictions(self, x, u) -> np.ndarray:
        """Vertex-model derivatives, shape ``(L, ..., n)``."""
        dx = np.asarray(x, dtype=float) - self.x_e
        du = np.asarray(u, dtype=float) - self.u_e
        return np.stack([dx @ A.T + du @ B.T for A, B in zip(self.vertex_A, self.vertex_B)])


def _box_extent(rows, bounds, center, direction) -> float:
    """Max of ``|c^T x|`` over the box ``|rows (x - center)| <= bounds``."""
    n = rows.shape[1]
    A_ub = np.vstack([rows, -rows])
    b_ub = np.concatenate([bounds + rows @ center, bounds - rows @ center])
    extent = 0.0
    for sign in (1.0, -1.0):
        res = linprog(
            -sign * direction, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * n, method="highs"
        )
        if res.status == 3:
            return np.inf
        if res.status != 0:
            raise InvalidRegion(f"validity box LP failed: {res.message}")
        extent = max(extent, -res.fun)
    return extent


def check_containment(ldi: PolytopicLDI, plant: Plant, tol: float = 1e-9) -> None:
    """Raise InvalidRegion unless the LDI state box lies inside the plant's X."""
    for a, alpha in zip(plant.state_rows, plant.state_bounds):
        extent = _box_extent(ldi.state_rows, ldi.state_bounds, ldi.x_e, a)
        if extent > alpha + tol:
            raise InvalidRegion(
                f"validity box reaches {extent:.6g} along row {a.tolist()}, limit {alpha:.6g}"
            )


def zeta_bound(plant: InvertedPendulum, theta_e, alpha, grid_points=ZETA_GRID_POINTS) -> float:
    """Brute-force bound on the pendulum's linearization error over ``|theta - theta_e| <= alpha``.

    Returns the largest ``|zeta(theta)|`` on a uniform grid, where
    ``zeta(theta) = (g/l) [(sin theta - sin theta_e) / (theta - theta_e) - cos theta_e]``
    and ``zeta(theta_e) = 0``.
    """
    if not alpha > 0:
        raise InvalidRegion(f"alpha must be positive, got {alpha}")
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    theta = np.linspace(theta_e - alpha, theta_e + alpha, int(grid_points))
    offset = theta - theta_e
    safe = np.where(offset == 0.0, 1.0, offset)
    chord = np.where(offset == 0.0, np.cos(theta_e), (np.sin(theta) - np.sin(theta_e)) / safe)
    zeta = (plant.g / plant.l) * (chord - np.cos(theta_e))
    return float(np.abs(zeta).max())


def _input_box(plant: Plant, u_e):
    budget = plant.input_bounds - np.abs(plant.input_rows @ u_e)
    if np.any(budget <= 0):
        raise InfeasibleEquilibrium(
            f"{plant.name}: equilibrium input {u_e.tolist()} leaves no input budget"
        )
    return plant.input_rows, budget


def linearize_pendulum(
    plant: InvertedPendulum,
    theta_e: float,
    *,
    grid_points: int = ZETA_GRID_POINTS,
    zeta_margin: float = ZETA_MARGIN,
    alpha_cap: float = PENDULUM_ALPHA_CAP,
    alpha_min: float = ALPHA_MIN,
) -> PolytopicLDI:
    """Two-vertex LDI of the pendulum bracketing the sine nonlinearity."""
    alpha = min(alpha_cap, plant.theta_c - abs(theta_e))
    if alpha <= alpha_min:
        raise InvalidRegion(f"validity width {alpha:.4g} at theta_e={theta_e} is below {alpha_min}")
    x_e = plant.equilibrium_state(theta_e)
    u_e = equilibrium_input(plant, x_e)
    input_rows, input_bounds = _input_box(plant, u_e)

    zeta = zeta_bound(plant, theta_e, alpha, grid_points) + zeta_margin
    slope = (plant.g / plant.l) * np.cos(theta_e)
    vertex_A = tuple(np.array([[0.0, 1.0], [slope + s * zeta, 0.0]]) for s in (1.0, -1.0))
    B = np.array([[0.0], [1.0 / plant.inertia]])
    ldi = PolytopicLDI(
        vertex_A=vertex_A,
        vertex_B=(B, B),
        x_e=x_e,
        u_e=u_e,
        state_rows=np.eye(2),
        state_bounds=np.array([alpha, plant.thetadot_max]),
        input_rows=input_rows,
        input_bounds=input_bounds,
    )
    check_containment(ldi, plant)
    return ldi


def linearize_springmass(plant: DoubleSpringMass, y_e: float, *, alpha_min: float = 0.0) -> PolytopicLDI:
    """Exact single-vertex model centred on the equilibrium ``(y_e, 0, y_e, 0)``.

    Each row of X is re-centred on ``x_e`` with its width reduced by the
    offset of ``x_e`` along that row, so the box stays inside X.
    """
    x_e = plant.equilibrium_state(y_e)
    widths = plant.state_bounds - np.abs(plant.state_rows @ x_e)
    if np.any(widths <= alpha_min):
        raise InvalidRegion(f"validity widths {widths.tolist()} at y_e={y_e} are not positive")
    u_e = equilibrium_input(plant, x_e)
    input_rows, input_bounds = _input_box(plant, u_e)
    ldi = PolytopicLDI(
        vertex_A=(plant.A,),
        vertex_B=(plant.B,),
        x_e=x_e,
        u_e=u_e,
        state_rows=plant.state_rows,
        state_bounds=widths,
        input_rows=input_rows,
        input_bounds=input_bounds,
    )
    check_containment(ldi, plant)
    return ldi


def linearize(plant: Plant, x_e) -> PolytopicLDI:
    """Build the LDI for ``plant`` at equilibrium state ``x_e``."""
    x_e = np.asarray(x_e, dtype=float)
    if isinstance(plant, InvertedPendulum):
        equilibrium_input(plant, x_e)
        return linearize_pendulum(plant, float(x_e[0]))
    if isinstance(plant, DoubleSpringMass):
        equilibrium_input(plant, x_e)
        return linearize_springmass(plant, float(x_e[0]))
    raise TypeError(f"no LDI construction registered for plant {plant.name!r}")
