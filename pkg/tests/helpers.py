"""Field builders shared by several test modules."""

import numpy as np

from autogap.surface import AnnulusChart, ScalarField


def stem_only_field(rng, shape=(96, 96), chart=None):
    """``s`` plus a small periodic wiggle with ``dF/ds > 0`` everywhere."""
    chart = chart or AnnulusChart.unit_area()
    k = int(rng.integers(1, 4))
    m = int(rng.integers(1, 3))
    amp = rng.uniform(0.02, 0.9 / (np.pi * m))
    ph = rng.uniform(0, 2 * np.pi)

    def fn(theta, s):
        return s + amp * np.sin(np.pi * m * s) * np.sin(k * theta + ph)

    return ScalarField.from_function(chart, fn, shape)


BUMP_AXES = (2.0, 0.3)


def bump_on_height(shape=(256, 256), height=30.0):
    """``s`` plus a steep cone-like cap over an ellipse of area 0.3 centred at ``(pi, 0.5)``."""
    chart = AnnulusChart.unit_area()
    a, b = BUMP_AXES

    def fn(theta, s):
        u = chart.dtheta(theta, np.pi) / a
        v = (s - 0.5) / b
        return s + height * np.maximum(0.0, 1.0 - u * u - v * v)

    return ScalarField.from_function(chart, fn, shape)
