"""Shared test helpers."""

import numpy as np


def relu_kink_free(model, x, radius, margin=3.0):
    """True when no hidden ReLU boundary lies within `margin * radius` of x.

    Conservative per-unit bound: a unit with preactivation z and incoming
    weight column w can only switch state within distance |z| / ||w||.
    """
    a = np.asarray(x, dtype=float)
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W + b
        if i == len(model.weights) - 1:
            break
        wn = np.linalg.norm(W, axis=0)
        if np.any(np.abs(z) < radius * margin * np.maximum(wn, 1e-12)):
            return False
        a = np.maximum(z, 0)
    return True
