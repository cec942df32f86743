import math
import os
import subprocess

import numpy as np
import pytest

import mardid


def test_ols_matches_numpy():
    rng = np.random.default_rng(0)
    x = np.column_stack([np.ones(50), rng.normal(size=(50, 2))])
    y = x @ np.array([1.0, -2.0, 0.5]) + rng.normal(size=50)
    fit = mardid.fit_ols(x, y)
    ref, *_ = np.linalg.lstsq(x, y, rcond=None)
    np.testing.assert_allclose(fit.coefficients, ref, atol=1e-10)


def test_logistic_intercept_only():
    y = np.array([1.0] * 3 + [0.0] * 7)
    fit = mardid.fit_logistic(np.ones((10, 1)), y)
    assert fit.converged
    assert fit.coefficients[0] == pytest.approx(math.log(3 / 7), abs=1e-6)


def test_generate_and_estimate():
    data = mardid.generate(n=2000, seed=1)
    assert len(data) == 2000
    assert data.dim == 4
    assert data.names == ["z1", "z2", "z3", "z4"]
    assert data.regime == "pre-simple"
    assert any(math.isnan(v) for v in data.y0)
    res = mardid.estimate(data, seed=1)
    assert abs(res.theta_hat - 5.0) < 0.5
    assert res.ci_lo < res.theta_hat < res.ci_hi
    assert len(res.if_values) == 2000
    assert res.efficiency_gap is not None and res.efficiency_gap.total > 0


def test_dataset_from_arrays_and_errors():
    rng = np.random.default_rng(3)
    n = 400
    x = rng.normal(size=(n, 2))
    a = (rng.uniform(size=n) < 0.5).astype(int).tolist()
    y0 = (x[:, 0] + rng.normal(size=n)).tolist()
    y1 = [v + 1.0 + 2.0 * t for v, t in zip(y0, a)]
    for i in range(0, n, 7):
        y0[i] = float("nan")
    d = mardid.Dataset(x, a, y0, y1, regime="pre-simple", names=["u", "v"])
    res = mardid.estimate(d, folds=4, seed=2)
    assert abs(res.theta_hat - 2.0) < 0.5

    with pytest.raises(mardid.MardidError):
        mardid.Dataset(x, a[:-1], y0, y1)
    with pytest.raises(ValueError):
        mardid.estimate(d, folds=1)


def test_simulate_is_deterministic():
    a = mardid.simulate(scenario="1*1", n=200, reps=4, seed=5, jobs=1)
    b = mardid.simulate(scenario="1*1", n=200, reps=4, seed=5, jobs=2)
    assert a.to_csv() == b.to_csv()
    assert [s.label for s in a.scenarios] == ["mu+pi+gamma+", "mu+pi-gamma+"]
    assert len(a.scenarios[0].theta_hats) == 4
    assert "Simulation results" in a.to_markdown()


def test_cli_tool_if_available(tmp_path):
    tool = os.environ.get("MARDID_TOOL")
    if not tool:
        pytest.skip("MARDID_TOOL not set")
    out = tmp_path / "g.csv"
    subprocess.run([tool, "generate", "--n", "100", "--out", str(out)], check=True, capture_output=True)
    d = mardid.Dataset.load_csv(str(out))
    assert len(d) == 100
