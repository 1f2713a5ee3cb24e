# Copyright 2026 The survint Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Tests of the pybind11 module."""

import numpy as np
import pytest

import survint


def regression_data(seed=5):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(0.4, 1.0, 300)
    x2 = rng.normal(0.0, 1.0, 120)
    X1 = np.column_stack([np.ones_like(x1), x1])
    X2 = np.column_stack([np.ones_like(x2), x2])
    y1 = 1.0 + 2.0 * x1 + rng.normal(size=x1.size)
    y2 = 1.0 + 2.0 * x2 + rng.normal(size=x2.size)
    W2 = rng.uniform(10.0, 50.0, x2.size)
    return X1, y1, X2, y2, W2


def test_effective_sample_size():
    assert survint.effective_sample_size(np.array([1.0, 1.0, 1.0, 3.0])) == pytest.approx(3.0)
    w = survint.adjusted_weights(np.array([1.0, 2.0, 5.0]))
    assert w.sum() == pytest.approx(survint.effective_sample_size(np.array([1.0, 2.0, 5.0])))


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        survint.effective_sample_size(np.array([1.0, 0.0]))


def test_propensity_and_weights():
    X1, _, X2, _, W2 = regression_data()
    fit = survint.estimate_propensity(X1, X2, W2)
    assert fit["converged"]
    assert np.all((fit["pi"] > 0) & (fit["pi"] < 1))
    w = survint.nps_weights(X1, X2, W2)
    assert w.shape == (X1.shape[0],)
    assert w.sum() == pytest.approx(W2.sum())


def test_fit_shapes_and_determinism():
    X1, y1, X2, y2, W2 = regression_data()
    W1 = survint.nps_weights(X1, X2, W2)
    a = survint.fit(X1, y1, W1, X2, y2, W2, scenario="C", draws=500, grid_size=100, seed=4)
    b = survint.fit(X1, y1, W1, X2, y2, W2, scenario="C", draws=500, grid_size=100, seed=4, threads=2)
    assert a["beta"].shape == (500, 2)
    assert np.array_equal(a["beta"], b["beta"])
    assert 0.0 < a["a_posterior_mean"] <= 1.0
    assert a["a_mass"].sum() == pytest.approx(1.0)


def test_predict_mean_near_truth():
    X1, y1, X2, y2, W2 = regression_data()
    W1 = survint.nps_weights(X1, X2, W2)
    out = survint.predict_mean(X1, y1, W1, X2, y2, W2, scenario="E", draws=2000, grid_size=100)
    xbar = (X2 * W2[:, None]).sum(axis=0) / W2.sum()
    assert abs(out["pm"] - (1.0 + 2.0 * xbar[1])) < 5 * out["psd"]
    lo, hi = out["hpd"]
    assert lo < out["pm"] < hi


def test_summarize_and_location_model():
    s = survint.summarize(np.linspace(0.0, 1.0, 1001))
    assert s["pm"] == pytest.approx(0.5)
    rng = np.random.default_rng(1)
    small = survint.location_discount_mean(rng.normal(size=20), rng.normal(size=200))
    assert 0.0 < small < 1.0


def test_binary_log_posterior_at_zero():
    X1, _, X2, _, W2 = regression_data()
    y1 = (X1[:, 1] > 0).astype(float)
    y2 = (X2[:, 1] > 0).astype(float)
    v = survint.binary_log_posterior(0.5, np.zeros(2), X1, y1, np.ones(len(y1)), X2, y2, W2)
    assert v == pytest.approx(-(len(y1) + len(y2)) * np.log(2.0))


def test_generate_population():
    pop = survint.generate_population(rho=0.5, N=4000, n1=300, n2=80, seed=2)
    assert pop["X"].shape == (4000, 4)
    assert pop["correlation"] == pytest.approx(0.5, abs=0.005)
    assert pop["pi2"].sum() == pytest.approx(80.0)
