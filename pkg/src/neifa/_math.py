"""Numerically stable logistic helpers shared by the model code."""

import numpy as np


def sigmoid(x):
    """Elementwise logistic function, split on sign so ``exp`` never overflows."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_sigmoid(x):
    """``log(sigmoid(x))`` computed as ``-softplus(-x)``."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))
