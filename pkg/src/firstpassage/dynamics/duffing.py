"""Duffing oscillator under discretized Gaussian white noise.

y'' + gamma y' + y + eps y^3 = f(t), from rest, with f a zero-order-hold
series scaled from standard-normal draws. The extreme response is
Z = max_t |y(t)| over the integration window. Integration is fixed-step
RK4, vectorized over a batch of realizations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["DuffingConfig", "white_noise_series", "duffing_response", "integrate_duffing"]

_FINITE_CHECK_EVERY = 100


@dataclass(frozen=True)
class DuffingConfig:
    """Uncertain-parameter Duffing testbed settings."""

    gamma_mean: float = 0.5
    gamma_std: float = 0.2
    eps_mean: float = 0.3
    eps_std: float = 0.1
    s_intensity: float = 1.0
    dt: float = 0.01
    t_end: float = 30.0

    def __post_init__(self):
        if self.dt <= 0.0 or self.t_end <= 0.0:
            raise ValueError("dt and t_end must be positive")
        if abs(self.t_end / self.dt - round(self.t_end / self.dt)) > 1e-9:
            raise ValueError("t_end must be an integer number of steps")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def n_noise(self) -> int:
        """Noise variables sit on the time grid t_k = k dt, k = 0..n_steps."""
        return self.n_steps + 1

    @property
    def n_inputs(self) -> int:
        return 2 + self.n_noise


def white_noise_series(theta, s_intensity: float, dt: float) -> np.ndarray:
    """Scale standard-normal draws to the discretized white-noise forcing
    f(t_k) = theta_k sqrt(2 pi S / dt), held constant between grid points."""
    theta = np.asarray(theta, dtype=float)
    return theta * math.sqrt(2.0 * math.pi * s_intensity / dt)


def duffing_response(gamma, eps, forcing, dt: float, substeps: int = 1,
                     return_series: bool = False):
    """RK4 integration of the Duffing equation from rest.

    Parameters
    ----------
    gamma, eps : array_like, shape (n,)
        Damping and cubic-stiffness coefficients per realization.
    forcing : array_like, shape (n, n_steps + 1)
        Forcing value on each grid point, zero-order-held over the step.
    substeps : int
        RK4 substeps per forcing interval (>1 for step-halving checks;
        the forcing grid is unchanged).
    return_series : bool
        If true (single realization only), return (t, y, v) instead of
        the extreme response.

    Returns
    -------
    ndarray, shape (n,)
        Z = max_k |y(t_k)| over all substep grid points.
    """
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    forcing = np.atleast_2d(np.asarray(forcing, dtype=float))
    n = gamma.shape[0]
    if eps.shape[0] != n or forcing.shape[0] != n:
        raise ValueError("gamma, eps and forcing must agree on batch size")
    n_steps = (forcing.shape[1] - 1) * substeps
    h = dt / substeps
    half = 0.5 * h

    y = np.zeros(n)
    v = np.zeros(n)
    zmax = np.zeros(n)
    if return_series:
        if n != 1:
            raise ValueError("series output is for a single realization")
        ys = np.zeros(n_steps + 1)
        vs = np.zeros(n_steps + 1)

    for k in range(n_steps):
        f = forcing[:, k // substeps]
        k1v = f - gamma * v - y - eps * y**3
        y2 = y + half * v
        v2 = v + half * k1v
        k2v = f - gamma * v2 - y2 - eps * y2**3
        y3 = y + half * v2
        v3 = v + half * k2v
        k3v = f - gamma * v3 - y3 - eps * y3**3
        y4 = y + h * v3
        v4 = v + h * k3v
        k4v = f - gamma * v4 - y4 - eps * y4**3
        y = y + (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        np.maximum(zmax, np.abs(y), out=zmax)
        if (k + 1) % _FINITE_CHECK_EVERY == 0 and not np.all(np.isfinite(y)):
            bad = int(np.argmax(~np.isfinite(y)))
            raise FloatingPointError(
                f"non-finite state in realization {bad} by step {k + 1}"
            )
        if return_series:
            ys[k + 1] = y[0]
            vs[k + 1] = v[0]

    if not np.all(np.isfinite(y)):
        bad = int(np.argmax(~np.isfinite(y)))
        raise FloatingPointError(f"non-finite state in realization {bad} at final step")
    if return_series:
        return np.arange(n_steps + 1) * h, ys, vs
    return zmax


def integrate_duffing(u, config: DuffingConfig | None = None, substeps: int = 1) -> np.ndarray:
    """Extreme displacement of the Duffing testbed for physical inputs
    u = (gamma, eps, theta_0 .. theta_{n_t-1}), batched as (n, 2 + n_t)."""
    config = config or DuffingConfig()
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[1] != config.n_inputs:
        raise ValueError(f"expected {config.n_inputs} inputs, got {u.shape[1]}")
    forcing = white_noise_series(u[:, 2:], config.s_intensity, config.dt)
    return duffing_response(u[:, 0], u[:, 1], forcing, config.dt, substeps=substeps)
