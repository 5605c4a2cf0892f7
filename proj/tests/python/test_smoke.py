import math

import numpy as np
import pytest

import alref


def test_version():
    assert alref.__version__ == "0.1.0"


def test_generate_pool_shapes_and_determinism():
    pool = alref.generate_pool(3, 2, width=40, height=24)
    assert len(pool) == 2
    image, labels = pool[0]
    assert image.shape == (5, 24, 40)
    assert image.dtype == np.float32
    assert labels.shape == (24, 40)
    assert labels.dtype == np.uint8
    assert image.min() >= 0.0 and image.max() <= 1.0
    again = alref.generate_pool(3, 2, width=40, height=24)
    np.testing.assert_array_equal(again[1][0], pool[1][0])
    with pytest.raises(alref.ConfigError):
        alref.generate_pool(3, 1)


def test_simulate_coarse_and_noise_rate():
    labels = np.zeros((5, 5), dtype=np.uint8)
    labels[2, 2] = 1
    coarse, steps = alref.simulate_coarse(labels, seed=1, min_filter=3, max_filter=3)
    assert len(steps) == 4
    assert all(fw == 3 and fh == 3 for _, fw, fh in steps)
    assert alref.noise_rate(labels, labels) == 0.0
    assert coarse.shape == labels.shape
    assert alref.noise_rate(coarse, labels) == np.mean(coarse != labels)


def test_entropy_and_utilities():
    probs = np.full((4, 2, 2), 0.25, dtype=np.float32)
    h = alref.entropy(probs)
    assert h.shape == (2, 2)
    assert np.allclose(h, math.log(4.0), atol=1e-12)
    mask = np.ones((2, 2), dtype=np.uint8)
    assert alref.utility_us(mask, h) == pytest.approx(5.545177, abs=1e-6)
    assert alref.utility_cs(np.array([[1, 0], [0, 0]], dtype=np.uint8)) == 1
    assert alref.utility_us(np.array([[1, 0], [1, 1]], dtype=np.uint8),
                            np.array([[0.5, 9.0], [0.25, 0.25]])) == 1.0
    assert alref.select_top_k([3.0, 1.0, 2.0], 2) == [0, 2]
    with pytest.raises(alref.ConfigError):
        alref.select_top_k([1.0], 2)
    with pytest.raises(alref.DimensionError):
        alref.utility_us(np.ones((3, 2), dtype=np.uint8), h)


def test_fit_predict_simplex():
    pool = alref.generate_pool(5, 2, width=32, height=32)
    images = [p[0] for p in pool]
    labels = [p[1] for p in pool]
    probs = alref.fit_predict(images, labels, images[0],
                              config={"chip_size": 16, "epochs": 3, "chips_per_epoch": 4})
    assert probs.shape == (4, 32, 32)
    assert np.allclose(probs.sum(axis=0), 1.0, atol=1e-5)


def test_run_experiment_records():
    pool = alref.generate_pool(1, 3, width=32, height=32)
    images = [p[0] for p in pool]
    labels = [p[1] for p in pool]
    config = {"cycles": 4, "repeats": 2, "n_candidates": 8, "k_select": 2, "candidate_size": 8,
              "strategy": "us",
              "predictor": {"chip_size": 16, "chips_per_epoch": 2, "epochs": 2}}
    records = alref.run_experiment(images, labels, config)
    assert len(records) == 2 * 3 * 5
    assert {r["strategy"] for r in records} == {"us"}
    rates = [r["acquisition_rate"] for r in records if r["repeat"] == 0 and r["fold"] == 0]
    assert rates == sorted(rates)
    again = alref.run_experiment(images, labels, config)
    strip = lambda rs: [{k: v for k, v in r.items() if k != "seconds"} for r in rs]
    assert strip(again) == strip(records)
    with pytest.raises(alref.FormatError):
        alref.run_experiment(images, labels, {"strategy": "best"})
    with pytest.raises(alref.ConfigError):
        alref.run_experiment(images, labels, {"k_select": 99})
