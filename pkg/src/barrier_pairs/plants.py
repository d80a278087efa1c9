"""Plant models: the inverted pendulum and the double spring-mass actuator.

Dynamics are control-affine, ``xdot = f(x) + g(x) u``, and every method
accepts batched states of shape ``(..., n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NoEquilibrium

EQUILIBRIUM_TOL = 1e-9


@dataclass(frozen=True)
class Plant:
    """Base class for a control-affine plant with symmetric box constraints.

    ``state_rows``/``state_bounds`` encode ``|a_i^T x| <= alpha_i`` and
    ``input_rows``/``input_bounds`` encode ``|b_i^T u| <= beta_i``.
    """

    name = "plant"
    state_names = ()

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def n_inputs(self) -> int:
        return self.input_rows.shape[1]

    @property
    def dimension(self) -> tuple[int, int]:
        return self.n_states, self.n_inputs

    @property
    def parameters(self) -> dict:
        raise NotImplementedError

    @property
    def state_rows(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def state_bounds(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def input_rows(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def input_bounds(self) -> np.ndarray:
        raise NotImplementedError

    def drift(self, x):
        raise NotImplementedError

    def input_matrix(self, x):
        raise NotImplementedError

    def dynamics(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        G = self.input_matrix(x)
        return self.drift(x) + np.einsum("...ij,...j->...i", G, u)

    def closed_form_equilibrium_input(self, x_e):
        raise NotImplementedError

    def equilibrium_state(self, s: float) -> np.ndarray:
        """Map a scalar manifold coordinate to an equilibrium state."""
        raise NotImplementedError

    def equilibrium_grid(self, count=50, low=-0.98, high=0.98) -> np.ndarray:
        return np.array([self.equilibrium_state(s) for s in np.linspace(low, high, count)])

    def state_violation(self, x) -> np.ndarray:
        """Largest row excess ``|a_i^T x| - alpha_i`` (positive means outside X)."""
        x = np.asarray(x, dtype=float)
        return (np.abs(x @ self.state_rows.T) - self.state_bounds).max(axis=-1)

    def input_violation(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return (np.abs(u @ self.input_rows.T) - self.input_bounds).max(axis=-1)

    def saturate(self, u) -> np.ndarray:
        """Radially scale ``u`` into U; identical to clipping for scalar inputs."""
        u = np.asarray(u, dtype=float)
        load = np.abs(u @ self.input_rows.T) / self.input_bounds
        worst = load.max(axis=-1, keepdims=True)
        return np.where(worst > 1.0, u / np.maximum(worst, 1.0), u)


@dataclass(frozen=True)
class InvertedPendulum(Plant):
    """``m l^2 thetaddot = tau + m g l sin(theta)`` with |theta|, |thetadot| and |tau| limits."""

    m: float = 1.0
    l: float = 1.213
    g: float = 9.8
    theta_c: float = 1.0
    thetadot_max: float = 1.0
    tau_max: float = 10.0
    name = "pendulum"
    state_names = ("theta", "theta_dot")

    @property
    def parameters(self):
        return {
            "m": self.m,
            "l": self.l,
            "g": self.g,
            "theta_c": self.theta_c,
            "thetadot_max": self.thetadot_max,
            "tau_max": self.tau_max,
        }

    @property
    def state_rows(self):
        return np.eye(2)

    @property
    def state_bounds(self):
        return np.array([self.theta_c, self.thetadot_max])

    @property
    def input_rows(self):
        return np.eye(1)

    @property
    def input_bounds(self):
        return np.array([self.tau_max])

    @property
    def inertia(self) -> float:
        return self.m * self.l**2

    def drift(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([x[..., 1], (self.g / self.l) * np.sin(x[..., 0])], axis=-1)

    def input_matrix(self, x):
        x = np.asarray(x, dtype=float)
        G = np.zeros(x.shape[:-1] + (2, 1))
        G[..., 1, 0] = 1.0 / self.inertia
        return G

    def closed_form_equilibrium_input(self, x_e):
        return np.array([-self.m * self.g * self.l * np.sin(x_e[0])])

    def equilibrium_state(self, s):
        return np.array([s, 0.0])


@dataclass(frozen=True)
class DoubleSpringMass(Plant):
    """Series elastic actuator: motor mass M1 driven by u, coupled by spring K to M2.

    State order is ``(y1, y1_dot, y2, y2_dot)``.
    """

    M1: float = 1.0
    M2: float = 1.0
    K: float = 1.0
    position_max: float = 1.0
    velocity_max: float = 1.0
    deflection_max: float = 1.0
    u_max: float = 10.0
    name = "springmass"
    state_names = ("y1", "y1_dot", "y2", "y2_dot")

    @property
    def parameters(self):
        return {
            "M1": self.M1,
            "M2": self.M2,
            "K": self.K,
            "position_max": self.position_max,
            "velocity_max": self.velocity_max,
            "deflection_max": self.deflection_max,
            "u_max": self.u_max,
        }

    @property
    def state_rows(self):
        return np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [1.0, 0.0, -1.0, 0.0],
            ]
        )

    @property
    def state_bounds(self):
        p, v = self.position_max, self.velocity_max
        return np.array([p, v, p, v, self.deflection_max])

    @property
    def input_rows(self):
        return np.eye(1)

    @property
    def input_bounds(self):
        return np.array([self.u_max])

    @property
    def A(self) -> np.ndarray:
        k1, k2 = self.K / self.M1, self.K / self.M2
        return np.array(
            [
                [0.0, 1.0, 0.0, 0.0],
                [-k1, 0.0, k1, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [k2, 0.0, -k2, 0.0],
            ]
        )

    @property
    def B(self) -> np.ndarray:
        return np.array([[0.0], [1.0 / self.M1], [0.0], [0.0]])

    def drift(self, x):
        return np.asarray(x, dtype=float) @ self.A.T

    def input_matrix(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.B, x.shape[:-1] + self.B.shape)

    def closed_form_equilibrium_input(self, x_e):
        # M1 balance with zero velocities; M2 balance holds only when y1 == y2.
        return np.array([self.K * (x_e[0] - x_e[2])])

    def equilibrium_state(self, s):
        return np.array([s, 0.0, s, 0.0])


PLANTS = {cls.name: cls for cls in (InvertedPendulum, DoubleSpringMass)}


def make_plant(name: str, **parameters) -> Plant:
    """Build a plant by registry name, overriding default parameters."""
    try:
        cls = PLANTS[name]
    except KeyError:
        raise ValueError(f"unknown plant {name!r}; expected one of {sorted(PLANTS)}") from None
    return cls(**parameters)


def equilibrium_input(plant: Plant, x_e, tol: float = EQUILIBRIUM_TOL) -> np.ndarray:
    """Return ``u_e`` with ``f(x_e) + g(x_e) u_e = 0``.

    The input is not checked against U; that is left to the synthesizer.
    """
    x_e = np.asarray(x_e, dtype=float)
    if x_e.shape != (plant.n_states,):
        raise ValueError(f"expected a state of length {plant.n_states}, got shape {x_e.shape}")
    u_e = plant.closed_form_equilibrium_input(x_e)
    residual = np.linalg.norm(plant.dynamics(x_e, u_e))
    if not residual <= tol:
        raise NoEquilibrium(
            f"{plant.name}: no equilibrium input at x_e={x_e.tolist()} (residual {residual:.3e})"
        )
    return u_e
