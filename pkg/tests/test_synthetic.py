"""Built-in synthetic dataset generators."""

import numpy as np
import pytest

from lokern.synthetic import (
    make_synthetic,
    two_moons_classification,
    uniform_square_regression,
)


def test_uniform_square_shape_and_range():
    ds = uniform_square_regression(500, seed=0)
    assert ds.n == 500 and ds.d == 2 and ds.task == "regression"
    assert np.all(ds.features >= -1.0) and np.all(ds.features <= 1.0)


def test_uniform_square_signal():
    ds = uniform_square_regression(2000, seed=1, noise=0.0)
    expected = np.cos(np.pi * ds.features[:, 0]) * ds.features[:, 1]
    assert np.max(np.abs(ds.labels - expected)) == 0.0


def test_two_moons_labels():
    ds = two_moons_classification(300, seed=2)
    assert ds.task == "classification"
    assert set(np.unique(ds.labels)) == {-1.0, 1.0}
    assert abs(int(np.sum(ds.labels == 1.0)) - 150) <= 1


def test_determinism():
    a = uniform_square_regression(100, seed=3)
    b = uniform_square_regression(100, seed=3)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)


def test_registry():
    ds = make_synthetic("two-moons", 50, seed=4)
    assert ds.n == 50
    with pytest.raises(ValueError, match="unknown synthetic"):
        make_synthetic("spiral", 10)
