"""Synthetic regression streams with known structure."""

import numpy as np

from ..errors import InputError
from ..kernels import Kernel
from .data import Dataset


def realizable(T, d=3, n_centers=3, bandwidth=1.0, noise=0.05, seed=0, U=None):
    """Targets from a Gaussian-kernel expansion over ``n_centers`` random centers plus noise.

    With ``U`` given, the expansion is rescaled so its RKHS norm is ``U``.
    Returns the dataset and the (centers, coefficients) of the target function.
    """
    rng = np.random.default_rng(seed)
    k = Kernel.gaussian(bandwidth)
    centers = rng.uniform(-1.0, 1.0, (n_centers, d))
    coef = rng.uniform(-1.0, 1.0, n_centers)
    if U is not None:
        norm = float(np.sqrt(coef @ k.matrix(centers, centers) @ coef))
        coef *= U / norm
    X = rng.uniform(-1.0, 1.0, (T, d))
    y = k.matrix(X, centers) @ coef + noise * rng.standard_normal(T)
    return Dataset(X, y, "realizable"), (centers, coef)


def smooth_function(T, d=4, noise=0.05, seed=0):
    """Targets from a fixed random smooth (low-frequency trigonometric) function plus noise."""
    rng = np.random.default_rng(seed)
    freqs = rng.normal(0.0, 1.5, (6, d))
    phases = rng.uniform(0.0, 2.0 * np.pi, 6)
    amps = rng.uniform(0.3, 1.0, 6)
    X = rng.uniform(-1.0, 1.0, (T, d))
    y = np.sin(X @ freqs.T + phases) @ amps + noise * rng.standard_normal(T)
    return Dataset(X, y, "smooth"), (freqs, phases, amps)


def controlled_spectrum(T, decay="exponential", seed=0):
    """Inputs whose Gaussian-kernel Gram has a chosen kind of eigen-decay.

    ``exponential``: one-dimensional Gaussian inputs under a bandwidth
    comparable to their spread, for which the spectrum is geometric.
    ``polynomial``: inputs spread over an 8-dimensional cube under a
    narrow bandwidth, whose spectrum decays slowly with a power-law
    envelope. Returns the dataset and the bandwidth to use.
    """
    rng = np.random.default_rng(seed)
    if decay == "exponential":
        X = rng.standard_normal((T, 1))
        bandwidth = 1.0
    elif decay == "polynomial":
        X = rng.uniform(-1.0, 1.0, (T, 8))
        bandwidth = 0.7
    else:
        raise InputError(f"unknown decay {decay!r}")
    y = np.tanh(X.sum(axis=1)) + 0.05 * rng.standard_normal(T)
    return Dataset(X, y, f"{decay}_spectrum"), bandwidth


def smooth_stream(T, d=2, seed=0):
    """Inputs from a fixed smooth low-dimensional distribution (for growth checks)."""
    rng = np.random.default_rng(seed)
    X = np.clip(rng.normal(0.0, 0.4, (T, d)), -1.0, 1.0)
    y = np.cos(2.0 * X[:, 0]) * np.exp(-X[:, -1] ** 2) + 0.05 * rng.standard_normal(T)
    return Dataset(X, y, "smooth_stream")


GENERATORS = {
    "realizable": lambda T, seed: realizable(T, seed=seed)[0],
    "smooth": lambda T, seed: smooth_function(T, seed=seed)[0],
    "exponential_spectrum": lambda T, seed: controlled_spectrum(T, "exponential", seed)[0],
    "polynomial_spectrum": lambda T, seed: controlled_spectrum(T, "polynomial", seed)[0],
}
