import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barrier_pairs import (
    Infeasible,
    InfeasibleEquilibrium,
    InvalidRegion,
    InvertedPendulum,
    PolytopicLDI,
    linearize,
    linearize_pendulum,
    linearize_springmass,
    zeta_bound,
)
from barrier_pairs.ldi import ZETA_MARGIN, check_containment

# Max of |zeta| over |theta - theta_e| <= 0.25, found by a 20001-point scan
# of the closed form in 30-digit arithmetic.
ZETA_AT_ZERO = 0.0838951337367693
ZETA_AT_HALF = 0.555276856468022


def zeta_oracle(plant, theta_e, theta):
    return (plant.g / plant.l) * ((np.sin(theta) - np.sin(theta_e)) / (theta - theta_e) - np.cos(theta_e))


def test_zeta_at_zero_matches_oracle(pendulum):
    assert zeta_bound(pendulum, 0.0, 0.25, 10001) == pytest.approx(ZETA_AT_ZERO, abs=1e-12)


def test_zeta_at_half_regression(pendulum):
    value = zeta_bound(pendulum, 0.5, 0.25, 10001)
    assert value > 0
    assert value == pytest.approx(ZETA_AT_HALF, abs=1e-12)


def test_zeta_vanishes_as_alpha_shrinks(pendulum):
    values = [zeta_bound(pendulum, 0.0, a, 101) for a in (1e-1, 1e-2, 1e-3, 1e-5)]
    assert values == sorted(values, reverse=True)
    assert values[-1] < 1e-9


def test_zeta_singularity_evaluates_to_zero(pendulum):
    # Three grid points put one exactly on theta_e.
    assert zeta_bound(pendulum, 0.3, 1e-8, 3) == pytest.approx(0.0, abs=1e-6)


def test_zeta_rejects_nonpositive_alpha(pendulum):
    with pytest.raises(InvalidRegion):
        zeta_bound(pendulum, 0.0, 0.0)
    with pytest.raises(InvalidRegion):
        zeta_bound(pendulum, 0.0, -0.1)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(1e-3, 0.3), st.floats(1e-3, 0.3))
def test_zeta_monotone_in_alpha(theta_e, a1, a2):
    plant = InvertedPendulum()
    lo, hi = sorted((a1, a2))
    # Both grids share an odd point count so theta_e is a node of each; the
    # continuous max is monotone and the fine grid resolves it to ~1e-9.
    assert zeta_bound(plant, theta_e, lo, 10001) <= zeta_bound(plant, theta_e, hi, 10001) + 1e-9


def test_linearize_pendulum_at_zero(pendulum):
    ldi = linearize_pendulum(pendulum, 0.0)
    zeta = zeta_bound(pendulum, 0.0, 0.25) + ZETA_MARGIN
    g_l = pendulum.g / pendulum.l
    entries = sorted(A[1, 0] for A in ldi.vertex_A)
    assert entries == pytest.approx([g_l - zeta, g_l + zeta], abs=1e-14)
    for A, B in zip(ldi.vertex_A, ldi.vertex_B):
        np.testing.assert_array_equal(A[0], [0.0, 1.0])
        assert A[1, 1] == 0.0
        np.testing.assert_allclose(B, [[0.0], [1.0 / pendulum.inertia]])
    np.testing.assert_allclose(ldi.state_bounds, [0.25, 1.0])
    np.testing.assert_allclose(ldi.input_bounds, [10.0])
    np.testing.assert_array_equal(ldi.x_e, [0.0, 0.0])


def test_linearize_pendulum_alpha_min_rule(pendulum):
    assert linearize_pendulum(pendulum, 0.9).state_bounds[0] == pytest.approx(0.1)
    with pytest.raises(InvalidRegion):
        linearize_pendulum(pendulum, 1.05)
    with pytest.raises(InvalidRegion):
        linearize_pendulum(pendulum, 0.9995)


def test_linearize_pendulum_input_budget(pendulum):
    ldi = linearize_pendulum(pendulum, 0.5)
    assert ldi.input_bounds[0] == pytest.approx(10.0 - 5.6991231476036, abs=1e-12)
    weak = InvertedPendulum(tau_max=1.0)
    with pytest.raises(InfeasibleEquilibrium):
        linearize_pendulum(weak, 0.5)
    with pytest.raises(Infeasible):
        linearize_pendulum(weak, 0.5)


def test_pendulum_convex_hull_covers_true_field(pendulum, rng):
    for theta_e in (0.0, 0.5, -0.8, 0.97):
        ldi = linearize_pendulum(pendulum, theta_e)
        alpha, omega_max = ldi.state_bounds
        x = np.column_stack(
            [theta_e + rng.uniform(-alpha, alpha, 1000), rng.uniform(-omega_max, omega_max, 1000)]
        )
        u = ldi.u_e + rng.uniform(-1, 1, (1000, 1)) * ldi.input_bounds
        true = pendulum.dynamics(x, u)
        vertex = ldi.vertex_predictions(x, u)
        lo, hi = vertex.min(axis=0), vertex.max(axis=0)
        assert np.all(true >= lo - 1e-9) and np.all(true <= hi + 1e-9)


def test_springmass_is_exact(springmass, rng):
    ldi = linearize_springmass(springmass, 0.2)
    assert ldi.n_vertices == 1
    np.testing.assert_array_equal(ldi.vertex_A[0], springmass.A)
    np.testing.assert_array_equal(ldi.vertex_B[0], springmass.B)
    x = ldi.x_e + rng.uniform(-0.5, 0.5, (50, 4))
    u = rng.uniform(-5, 5, (50, 1))
    np.testing.assert_allclose(ldi.vertex_predictions(x, u)[0], springmass.dynamics(x, u), atol=1e-14)


def test_springmass_widths(springmass):
    np.testing.assert_allclose(linearize_springmass(springmass, 0.0).state_bounds, [1, 1, 1, 1, 1])
    np.testing.assert_allclose(linearize_springmass(springmass, 0.0).input_bounds, [10])
    widths = linearize_springmass(springmass, 0.5).state_bounds
    np.testing.assert_allclose(widths[[0, 2]], [0.5, 0.5])
    np.testing.assert_allclose(widths[[1, 3, 4]], [1, 1, 1])
    with pytest.raises(InvalidRegion):
        linearize_springmass(springmass, 1.0)


def test_validity_box_inside_x(springmass, rng):
    for y_e in (-0.9, 0.0, 0.6):
        ldi = linearize_springmass(springmass, y_e)
        corners = rng.uniform(-1, 1, (2000, 4))
        # Sample inside the box by rejection, then check X membership.
        x = ldi.x_e + corners * np.array([ldi.state_bounds[0], 1, ldi.state_bounds[2], 1])
        dx = x - ldi.x_e
        inside = np.all(np.abs(dx @ ldi.state_rows.T) <= ldi.state_bounds, axis=1)
        assert inside.any()
        assert np.all(springmass.state_violation(x[inside]) <= 1e-12)


def test_containment_check_rejects_oversized_box(pendulum):
    ldi = linearize_pendulum(pendulum, 0.0)
    fat = PolytopicLDI(
        ldi.vertex_A, ldi.vertex_B, ldi.x_e, ldi.u_e, ldi.state_rows, [1.5, 1.0], ldi.input_rows, ldi.input_bounds
    )
    with pytest.raises(InvalidRegion):
        check_containment(fat, pendulum)


def test_ldi_invariants():
    A = np.zeros((2, 2))
    B = np.zeros((2, 1))
    with pytest.raises(ValueError):
        PolytopicLDI((A,), (), [0, 0], [0], np.eye(2), [1, 1], np.eye(1), [1])
    with pytest.raises(InvalidRegion):
        PolytopicLDI((A,), (B,), [0, 0], [0], np.eye(2), [1, 0], np.eye(1), [1])
    with pytest.raises(InvalidRegion):
        PolytopicLDI((A,), (B,), [0, 0], [0], np.eye(2), [1, 1], np.eye(1), [-1])


def test_linearize_dispatch(pendulum, springmass):
    assert linearize(pendulum, [0.2, 0.0]).n_vertices == 2
    assert linearize(springmass, [0.2, 0.0, 0.2, 0.0]).n_vertices == 1
