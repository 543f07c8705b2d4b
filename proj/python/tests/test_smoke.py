import json
import os
from pathlib import Path

import numpy as np
import pytest

import nfde

CONFIGS = Path(os.environ.get("NFDE_CONFIG_DIR", Path(__file__).resolve().parents[2] / "configs"))
DOMAIN = {"shape": "interval", "L": 1.0, "n": 32}


def test_nonlinearity_vectorised():
    nl = nfde.nonlinearity({"kind": "pure_power", "m": 2})
    r = np.linspace(0, 3, 7)
    np.testing.assert_allclose(nl.value(r), r**2)
    # Fenchel equality at z = F'(r).
    np.testing.assert_allclose(nl.legendre(nl.derivative(r)) + nl.value(r), r * nl.derivative(r), rtol=1e-10)
    assert nl.m0 == pytest.approx(2.0)


def test_operator_inverse_round_trip():
    op = nfde.build_operator(DOMAIN, {"family": "spectral_power", "s": 0.5})
    assert op.matrix.shape == (32, 32)
    v = np.random.default_rng(1).random(32)
    np.testing.assert_allclose(op.apply(op.apply_inverse(v)), v, rtol=1e-9)
    assert np.all(op.first_eigenfunction() >= 0)
    assert op.lambda1 == pytest.approx(op.eigenvalues.min())


def test_evolve_decays_and_stays_nonnegative():
    op = nfde.build_operator(DOMAIN, {"family": "spectral_power", "s": 0.5})
    u0 = nfde.make_initial(DOMAIN, {"kind": "bump", "height": 4.0})
    tr = nfde.evolve(op, {"kind": "pure_power", "m": 2}, u0, [0.0, 0.1, 0.5], {"dt": 0.005})
    assert tr.states.shape == (3, 32)
    sup = tr.states.max(axis=1)
    assert sup[0] > sup[1] > sup[2] > 0
    assert tr.states.min() >= 0


def test_run_experiment_reports():
    cfg = json.loads((CONFIGS / "zero.json").read_text())
    cfg["domain"]["n"] = 32
    entry = nfde.run_experiment(cfg)
    assert entry["pass"]
    assert {c["check"] for c in entry["checks"]} >= {"monotonicity", "weighted_l1"}


def test_config_errors_raise_value_error():
    with pytest.raises(ValueError, match="s out of range"):
        nfde.run_experiment(
            {
                "domain": DOMAIN,
                "operator": {"family": "spectral_power", "s": 1.5},
                "nonlinearity": {"kind": "pure_power", "m": 2},
                "initial": {"kind": "zero"},
                "time": {},
            }
        )
    with pytest.raises(ValueError):
        nfde.make_initial(DOMAIN, {"kind": "bump", "height": -1})


def test_cli_exit_codes(tmp_path):
    code, out, _ = nfde.cli("verify", "--config", CONFIGS / "zero.json", "--out", tmp_path / "z", "--quiet")
    assert code == 0 and out == ""
    assert (tmp_path / "z" / "manifest.json").exists()
    assert nfde.cli("teleport")[0] == 2
