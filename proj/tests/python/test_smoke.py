import json
import math
from pathlib import Path

import numpy as np
import pytest

import hybridswap as hs

IMPURITY = (0.806, 0.183, 0.011)


def ideal_swapped(g):
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = (1 - g * g) / 2
    rho[1, 1] = g * g / 2
    rho[2, 2] = 0.5
    rho[1, 2] = rho[2, 1] = g / 2
    return rho


def test_version():
    assert hs.__version__ == "0.1.0"


def test_split_photon_is_valid_state():
    rho = hs.split_photon(0.5)
    rho.validate()
    assert rho.cutoffs == [1, 1]
    assert np.isclose(np.trace(rho.data).real, 1.0)
    assert np.allclose(rho.data, rho.data.conj().T)


@pytest.mark.parametrize("r", [0.3, 0.71, 1.01])
def test_optimal_gain_gives_ideal_swapped_state(r):
    out = hs.apply_channel(hs.split_photon(0.5), 1, hs.ChannelSpec(r))
    g = math.tanh(r)
    c0, c1 = out.cutoffs
    keep = [n0 * (c1 + 1) + n1 for n0 in range(2) for n1 in range(2)]
    block = out.data[np.ix_(keep, keep)]
    assert np.abs(block - ideal_swapped(g)).max() < 1e-8
    assert math.isclose(np.trace(block).real, 1.0, abs_tol=1e-8)
    assert math.isclose(hs.ChannelSpec(r).params()["eta"], g * g, rel_tol=1e-12)


def test_log_negativity_values():
    assert math.isclose(hs.log_negativity(hs.split_photon(0.5))["log_negativity"], 1.0, abs_tol=1e-10)
    e = hs.log_negativity(hs.split_photon(0.5, impurity=IMPURITY))["log_negativity"]
    assert abs(e - 0.71) <= 0.02


def test_gain_scan_without_squeezing_is_zero():
    rows = hs.gain_scan(0.5, [0.0, 0.71])
    assert all(e == 0.0 for r, _, e in rows if r == 0.0)
    assert max(e for r, _, e in rows if r > 0) > 0.3


def test_postselection_closed_forms():
    g = 0.61
    rho = hs.DensityMatrix([1, 1], ideal_swapped(g))
    s = hs.summarize(rho)
    assert math.isclose(s["P"], g * g / 2, abs_tol=1e-12)
    assert math.isclose(s["S"], 2 * math.sqrt(2), abs_tol=1e-12)
    assert math.isclose(s["F_av"], 1.0, abs_tol=1e-12)


def test_tomography_round_trip_small():
    rho = hs.DensityMatrix([1, 1], ideal_swapped(math.tanh(0.71)))
    samples = hs.sample_homodyne(rho, 4000, seed=3)
    assert samples.shape == (4000, 4)
    again = hs.sample_homodyne(rho, 4000, seed=3)
    assert np.array_equal(samples, again)
    est, diag = hs.mle_reconstruct(samples, cutoff=1, max_iter=500, tol=1e-9)
    est.validate()
    assert hs.fidelity(est, rho) > 0.95
    history = diag["loglik_history"] if "loglik_history" in diag else []
    assert all(b >= a - 1e-9 * abs(a) for a, b in zip(history, history[1:]))


def test_invalid_input_raises():
    with pytest.raises(ValueError):
        hs.split_photon(1.5)


def test_loss_fit_reproduces_endpoints():
    fit = hs.fit_losses(0.5, IMPURITY, 1.01, 0.79)
    assert fit["converged"]
    spec = hs.ChannelSpec(1.01, 0.79, post_loss=fit["post_loss"], resource_loss=fit["resource_loss"])
    values = hs.evaluate_model(0.5, IMPURITY, spec)
    assert abs(values["E_AD"] - 0.28) <= 0.01
    assert abs(values["P"] - 0.160) <= 0.003


def test_run_from_config(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("experiment: postselect\nsource: {R: 0.5}\nchannel: {r: 1.01}\n")
    summary = hs.run("postselect", str(cfg), out=str(tmp_path / "out"))
    assert math.isclose(summary["postselect"]["S"], 2 * math.sqrt(2), abs_tol=1e-12)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["experiment"] == "postselect"


def test_config_error_is_raised(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("source: {R: 0.5}\nchanel: {r: 1}\n")
    with pytest.raises(hs.ConfigError, match="bad.yaml:2"):
        hs.run("swap", str(cfg), out=str(tmp_path / "out"))
