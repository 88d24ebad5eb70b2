import math

import numpy as np
import pytest

import hamrc


def small_config():
    cfg = hamrc.load_config("fig4")
    cfg.reservoir.nodes = 60
    cfg.segment_length = 400
    cfg.transient = 50
    return cfg


def test_reservoir_build_and_radius():
    rc = hamrc.ReservoirConfig()
    rc.nodes = 50
    rc.density = 0.2
    rc.spectral_radius = 0.9
    res = hamrc.build_reservoir(rc, 3)
    eig = np.abs(np.linalg.eigvals(res.adjacency)).max()
    assert eig == pytest.approx(0.9, rel=1e-6)
    assert hamrc.spectral_radius(np.diag([2.0, -3.0])) == pytest.approx(3.0)


def test_step_scalar_case():
    rc = hamrc.ReservoirConfig()
    rc.nodes = 3
    rc.leak = 1.0
    res = hamrc.build_reservoir(rc, 1)
    state = hamrc.step(res, np.zeros(3), np.zeros(4), 0.0)
    assert np.all(np.abs(state) <= 1.0)


def test_ridge():
    w = hamrc.ridge_readout(np.array([[1.0, 1.0]]), np.array([[2.0, 2.0]]), 1.0)
    assert w[0, 0] == pytest.approx(4.0 / 3.0)
    with pytest.raises(hamrc.NumericalError):
        hamrc.ridge_readout(np.zeros((2, 4)), np.ones((1, 4)), 0.0)


def test_train_predict_roundtrip(tmp_path):
    cfg = small_config()
    model = hamrc.train_model(cfg)
    assert model.manifest["betas"] == [-1.84, 1.0, 1.45, 1.98]
    run = hamrc.predict(cfg, model, 2.0, 200)
    assert run["outputs"].shape == (4, 200)
    path = str(tmp_path / "model.json")
    hamrc.save_model(path, model, cfg)
    again = hamrc.load_model(path)
    rerun = hamrc.predict(cfg, again, 2.0, 200)
    assert np.max(np.abs(rerun["outputs"] - run["outputs"])) <= 1e-12


def test_config_errors():
    with pytest.raises(hamrc.ConfigError, match="training.segment_lenght"):
        hamrc.parse_config('{"training": {"segment_lenght": 3}}')
    assert isinstance(hamrc.ConfigError("x"), ValueError)


def test_models():
    assert hamrc.pendulum_energy(np.array([0.6, 0.0, 1.35, 0.0])) == pytest.approx(-1.3475, abs=5e-4)
    traj = hamrc.pendulum_integrate(0.6, 1.35, 0.0, 0.0, 100)
    assert traj.shape == (4, 100)
    orbit = hamrc.standard_map_orbit(math.pi, 0.0, 0.5, 5)
    assert np.allclose(orbit[0], math.pi)
    theta, p = hamrc.decode_map_state(hamrc.encode_map_state(math.pi / 2, math.pi))
    assert theta == pytest.approx(math.pi / 2)
    assert p == pytest.approx(math.pi)


def test_sections_and_distance():
    cfg = hamrc.load_config("fig1a")
    truth = hamrc.ground_truth(cfg, 1.35, 2000)
    pts = hamrc.section(cfg, truth)
    assert pts.shape[0] == 4 and pts.shape[1] > 10
    assert hamrc.climate_distance(cfg, pts, pts) == 0.0
