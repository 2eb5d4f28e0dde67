"""Seeded synthetic regression data.

Two designs are available:

``equicorrelated``
    Gaussian predictors with unit variance and common pairwise correlation
    ``rho``, alternating exponentially decaying coefficients, Student t(4)
    errors scaled to a target signal-to-noise ratio, no intercept.
``factor``
    ``x_ij = z_ij + 0.5 u_i`` with independent standard normal ``z`` and
    ``u`` (population correlation 0.25 / 1.25 = 0.2, variance 1.25), a
    sparse coefficient vector with values drawn from +-1..+-10, intercept
    10 and unscaled t(4) errors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InvalidParameter

T4_VARIANCE = 2.0  # df / (df - 2)


@dataclass
class SynthData:
    data: Dataset
    beta: np.ndarray
    beta0: float
    params: dict = field(default_factory=dict)


def decay_coefficients(p: int) -> np.ndarray:
    """``beta_j = (-1)^j exp(-(j - 1)/10)`` for j = 1..p."""
    j = np.arange(1, p + 1)
    return np.where(j % 2 == 0, 1.0, -1.0) * np.exp(-(j - 1) / 10.0)


def noise_scale(beta, rho: float, snr: float, noise_variance: float = T4_VARIANCE) -> float:
    """Error multiplier giving ``Var(x'beta) / Var(k E) = snr`` under the equicorrelated design."""
    beta = np.asarray(beta, dtype=np.float64)
    signal = (1.0 - rho) * beta.dot(beta) + rho * beta.sum() ** 2
    return float(np.sqrt(signal / (snr * noise_variance)))


def _errors(rng, n, dist):
    if dist == "t4":
        return rng.standard_t(4, n)
    if dist == "normal":
        return rng.standard_normal(n)
    raise InvalidParameter(f"unknown error distribution {dist!r}")


def synth_generate(
    n: int,
    p: int,
    *,
    design: str = "equicorrelated",
    rho: float = 0.25,
    snr: float = 3.0,
    sparsity: float = 0.1,
    error: str = "t4",
    seed: int = 0,
) -> SynthData:
    """Draw one dataset.

    ``rho`` and ``snr`` apply to the equicorrelated design; ``sparsity``
    (fraction of ``min(n, p)`` coefficients that are nonzero, at least one)
    applies to the factor design.
    """
    if n < 1 or p < 1:
        raise InvalidParameter("n and p must be positive")
    rng = np.random.default_rng(seed)
    params = {"n": n, "p": p, "design": design, "error": error, "seed": seed}
    if design == "equicorrelated":
        if not 0.0 <= rho < 1.0:
            raise InvalidParameter("rho must lie in [0, 1)")
        if not snr > 0:
            raise InvalidParameter("snr must be positive")
        u = rng.standard_normal(n)
        X = np.sqrt(1.0 - rho) * rng.standard_normal((n, p)) + np.sqrt(rho) * u[:, None]
        beta = decay_coefficients(p)
        var = T4_VARIANCE if error == "t4" else 1.0
        k = noise_scale(beta, rho, snr, var)
        y = X @ beta + k * _errors(rng, n, error)
        b0 = 0.0
        params.update(rho=rho, snr=snr, noise_scale=k)
    elif design == "factor":
        if not 0.0 < sparsity <= 1.0:
            raise InvalidParameter("sparsity must lie in (0, 1]")
        u = rng.standard_normal(n)
        X = rng.standard_normal((n, p)) + 0.5 * u[:, None]
        q = max(int(round(sparsity * min(n, p))), 1)
        beta = np.zeros(p)
        support = np.sort(rng.choice(p, size=q, replace=False))
        beta[support] = rng.integers(1, 11, size=q) * rng.choice([-1.0, 1.0], size=q)
        b0 = 10.0
        y = b0 + X @ beta + _errors(rng, n, error)
        params.update(sparsity=sparsity, correlation=0.2)
    else:
        raise InvalidParameter(f"unknown design {design!r}")
    return SynthData(Dataset(y, X), beta, b0, params)
