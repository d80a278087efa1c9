import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barrier_pairs import InvertedPendulum, MinQuadraticBarrier, QuadraticBarrierPair, SynthesisConfig
from barrier_pairs import io


def test_dumps_floats_use_17_digits():
    text = io.dumps({"a": 0.1, "b": [1, 2.5], "c": "x"})
    assert '"a": 0.10000000000000001' in text
    assert json.loads(text) == {"a": 0.1, "b": [1, 2.5], "c": "x"}
    with pytest.raises(io.FormatError):
        io.dumps({"a": float("nan")})


def test_bank_round_trip_byte_identical(pendulum, pendulum_bank, tmp_path):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    io.save_bank(first, pendulum, SynthesisConfig(), pendulum_bank)
    loaded = io.load_bank(first)
    io.save_bank(second, loaded.plant, loaded.config, loaded.bank)
    assert first.read_bytes() == second.read_bytes()
    assert loaded.plant == pendulum
    for a, b in zip(pendulum_bank, loaded.bank):
        np.testing.assert_array_equal(a.Q, b.Q)
        np.testing.assert_array_equal(a.K, b.K)
        np.testing.assert_array_equal(a.x_e, b.x_e)
        assert a.margins == b.margins and a.log_det == b.log_det


def test_bank_load_errors(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    with pytest.raises(io.FormatError):
        io.load_bank(empty)
    with pytest.raises(io.FormatError):
        io.bank_from_dict({"schema_version": 99})
    with pytest.raises(io.FormatError):
        io.bank_from_dict({"schema_version": 1, "plant": {"name": "pendulum"}, "synthesis": {}, "pairs": []})


def test_config_grid_and_values():
    run = io.config_from_dict({"plant": "pendulum", "equilibria": {"count": 5, "low": -0.5, "high": 0.5}})
    np.testing.assert_allclose(run.equilibria[:, 0], np.linspace(-0.5, 0.5, 5))
    run = io.config_from_dict({"plant": "springmass", "equilibria": {"values": [0.1, -0.2]}})
    np.testing.assert_allclose(run.equilibria, [[0.1, 0, 0.1, 0], [-0.2, 0, -0.2, 0]])
    run = io.config_from_dict(
        {"plant": "pendulum", "parameters": {"tau_max": 8}, "synthesis": {"lambda": 0.2}, "equilibria": {}}
    )
    assert run.plant.tau_max == 8 and run.synthesis.lam == 0.2 and len(run.equilibria) == 50


@pytest.mark.parametrize(
    "data",
    [
        [],
        {"plant": "cartpole"},
        {"plant": "pendulum", "parameters": {"mass": 1}},
        {"plant": "pendulum", "synthesis": {"lambda": -1}},
        {"plant": "pendulum", "equilibria": {"values": [[0.0, 0.0, 0.0]]}},
        {"plant": "pendulum", "equilibria": {"count": 0}},
        {"plant": "pendulum", "extra": 1},
    ],
)
def test_config_errors(data):
    with pytest.raises(io.FormatError):
        io.config_from_dict(data)


def test_parse_projection(pendulum, springmass):
    assert io.parse_projection("theta,theta_dot", pendulum) == (0, 1)
    assert io.parse_projection("y2, y1", springmass) == (2, 0)
    assert io.parse_projection("x1,x3", springmass) == (1, 3)
    for bad in ("theta", "theta,theta", "y1,y9", "x4,x0", "alpha,beta"):
        with pytest.raises(io.FormatError):
            io.parse_projection(bad, springmass if bad[0] in "yx" else pendulum)


def random_spd(rng, n):
    M = rng.normal(size=(n, n))
    return M @ M.T + 0.1 * np.eye(n)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_schur_shadow_matches_marginal_covariance(seed, n):
    rng = np.random.default_rng(seed)
    Q = random_spd(rng, n)
    coords = tuple(rng.choice(n, 2, replace=False))
    S = io.projected_shape(np.linalg.inv(Q), coords)
    np.testing.assert_allclose(S, np.linalg.inv(Q[np.ix_(coords, coords)]), rtol=1e-7, atol=1e-9)


def test_projection_is_a_shadow_not_a_slice(rng):
    Q = random_spd(rng, 4)
    pair = QuadraticBarrierPair(np.zeros(4), [0.0], Q, np.zeros((1, 4)))
    boundary = io.projected_boundary(pair, (0, 2))
    # Support function of the shadow in direction w equals sqrt(w^T Q_sub w).
    for phi in np.linspace(0, np.pi, 7):
        w = np.array([np.cos(phi), np.sin(phi)])
        support = np.sqrt(w @ Q[np.ix_([0, 2], [0, 2])] @ w)
        assert (boundary @ w).max() == pytest.approx(support, rel=1e-3)


def test_identity_bank_gives_unit_circle(tmp_path):
    bank = MinQuadraticBarrier([QuadraticBarrierPair([0, 0], [0], np.eye(2), [[0, 0]])])
    path = tmp_path / "r.csv"
    io.export_region(path, bank, (0, 1), ["theta", "theta_dot"])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["pair", "k", "theta", "theta_dot"]
    pts = np.array([[float(a), float(b)] for _, _, a, b in rows[1:]])
    assert len(pts) == 256
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-15)
    np.testing.assert_allclose(pts[64], [0.0, 1.0], atol=1e-15)


def test_pendulum_regions_inside_box(pendulum_bank):
    for pair in pendulum_bank:
        pts = io.projected_boundary(pair, (0, 1))
        assert np.all(np.abs(pts) <= 1 + 1e-9)


def test_springmass_regions_inside_deflection_band(springmass_bank):
    for pair in springmass_bank:
        pts = io.projected_boundary(pair, (0, 2))
        assert np.all(np.abs(pts) <= 1 + 1e-9)
        assert np.all(np.abs(pts[:, 0] - pts[:, 1]) <= 1 + 1e-9)
