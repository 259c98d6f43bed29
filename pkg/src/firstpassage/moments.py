"""Fractional-moment estimation from weighted samples and the adaptive
sample-size-extension loop.

The estimator is the weighted sum M^r = sum_k w_k Z_k^r over committed
design samples. The adaptive loop extends the design one batch at a
time, evaluates the model only on the new points, reallocates weights,
and stops once the bootstrap coefficient of variation of the
second-order moment falls below tolerance.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .distributions import QuadratureError
from .sampling import RlssDesign, lss_init, transform_unit, weighted_bootstrap_cov

__all__ = [
    "DEFAULT_ORDERS",
    "FractionalMomentSet",
    "ConvergenceConfig",
    "AdaptiveResult",
    "estimate_moments",
    "adaptive_estimate",
    "two_sided_moment_check",
]

DEFAULT_ORDERS = np.arange(1, 9) / 4.0  # 1/4, 1/2, ..., 2


@dataclass
class FractionalMomentSet:
    """Estimated fractional moments with the budget that produced them."""

    orders: np.ndarray
    estimates: np.ndarray
    sample_count: int
    cov_trace: list = field(default_factory=list)  # rows (batch, samples, M1, M2, cov_M2)
    variance_floored: bool = False

    @property
    def mean(self) -> float:
        """First moment, when order 1 is on the grid."""
        return float(self.estimates[np.argmin(np.abs(self.orders - 1.0))])

    @property
    def std(self) -> float:
        """sqrt(M^2 - (M^1)^2), floored at zero on fp cancellation."""
        m1 = self._order(1.0)
        m2 = self._order(2.0)
        var = m2 - m1 * m1
        if var < 0.0:
            self.variance_floored = True
            return 0.0
        return float(np.sqrt(var))

    def _order(self, r: float) -> float:
        k = int(np.argmin(np.abs(self.orders - r)))
        if abs(self.orders[k] - r) > 1e-12:
            raise ValueError(f"order {r} not in the estimated grid")
        return float(self.estimates[k])


@dataclass(frozen=True)
class ConvergenceConfig:
    """Stopping rule for the adaptive loop: COV{M^2} < tolerance,
    checked after every batch of ``batch`` new samples."""

    tolerance: float = 0.015
    batch: int = 8
    max_batches: int = 500
    n_bootstrap: int = 100

    def __post_init__(self):
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be positive")
        if self.batch < 1:
            raise ValueError("batch size must be >= 1")
        if self.max_batches < 1:
            raise ValueError("max_batches must be >= 1")


def estimate_moments(values, weights, orders=None) -> FractionalMomentSet:
    """Weighted fractional moments M^r = sum_k w_k Z_k^r.

    ``values`` must be positive whenever a non-integer order is
    requested; weights must sum to one. Summation runs in ascending
    sample-index order so results do not depend on evaluation schedule.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    orders = DEFAULT_ORDERS if orders is None else np.asarray(orders, dtype=float)
    if values.shape != weights.shape or values.ndim != 1:
        raise ValueError("values and weights must be 1-D of equal length")
    if abs(weights.sum() - 1.0) > 1e-10:
        raise ValueError(f"weights sum to {weights.sum():.15g}, expected 1")
    fractional = np.any(orders != np.round(orders))
    if fractional and np.any(values <= 0.0):
        k = int(np.argmax(values <= 0.0))
        raise ValueError(
            f"sample {k} has non-positive value {values[k]:.6g}; "
            "fractional orders need positive responses"
        )
    est = np.array([np.sum(weights * values**r) if r != 0.0 else 1.0 for r in orders])
    return FractionalMomentSet(orders=orders, estimates=est, sample_count=values.size)


@dataclass
class AdaptiveResult:
    """Everything the adaptive loop committed to: points (unit cube),
    physical inputs, per-response extremes, final weights."""

    moments: FractionalMomentSet
    design: RlssDesign
    unit_points: np.ndarray
    values: np.ndarray  # (n, n_responses)
    weights: np.ndarray
    converged: bool
    batches: int

    @property
    def evaluations(self) -> int:
        return self.values.shape[0]

    def response_moments(self, index: int, orders=None) -> FractionalMomentSet:
        """Moment set of another tracked response from the same samples."""
        return estimate_moments(self.values[:, index], self.weights, orders)


def _evaluate_parallel(model, u_phys: np.ndarray, workers: int) -> np.ndarray:
    """Evaluate a batch, optionally across a thread pool. Results are
    reassembled in sample-index order, so worker count cannot change
    the outcome."""
    if workers <= 1 or u_phys.shape[0] <= 1:
        return np.atleast_2d(model.evaluate_batch(u_phys))
    chunks = np.array_split(np.arange(u_phys.shape[0]), min(workers, u_phys.shape[0]))
    chunks = [c for c in chunks if c.size]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: np.atleast_2d(model.evaluate_batch(u_phys[c])), chunks))
    return np.concatenate(parts, axis=0)


def adaptive_estimate(
    model,
    convergence: ConvergenceConfig | None = None,
    orders=None,
    n_init: int = 1,
    delta: int = 1,
    seed: int = 0,
    workers: int = 1,
    design: RlssDesign | None = None,
) -> AdaptiveResult:
    """Adaptive fractional-moment estimation with sequential extension.

    Per batch: extend the design, evaluate the model only on the new
    points, reallocate the weights, and bootstrap the COV of the
    second-order moment of the model's convergence response. Stops when
    the COV drops below tolerance; hitting the batch cap returns a
    result flagged as non-converged.
    """
    convergence = convergence or ConvergenceConfig()
    orders = DEFAULT_ORDERS if orders is None else np.asarray(orders, dtype=float)
    if design is None:
        design = lss_init(n_init, model.n_inputs, seed=seed, delta=delta)
    conv_idx = getattr(model, "convergence_index", 0)

    values = None
    trace = []
    converged = False
    batches = 0
    for l in range(1, convergence.max_batches + 1):
        ids = design.extend(convergence.batch)
        dims = np.arange(design.n_s)
        pts = design.coord_val[dims[None, :], design.point_bins[ids]]
        u_phys = transform_unit(pts, model.marginals)
        z_new = _evaluate_parallel(model, u_phys, workers)
        values = z_new if values is None else np.concatenate([values, z_new], axis=0)
        weights = design.committed_weights()
        zc = values[:, conv_idx]
        cov = weighted_bootstrap_cov(zc, weights, 2.0,
                                     n_boot=convergence.n_bootstrap,
                                     seed=seed + 0x5EED * l)
        m1 = float(np.sum(weights * zc))
        m2 = float(np.sum(weights * zc**2))
        trace.append((l, values.shape[0], m1, m2, cov))
        batches = l
        if cov < convergence.tolerance:
            converged = True
            break

    weights = design.committed_weights()
    mset = estimate_moments(values[:, conv_idx], weights, orders)
    mset.cov_trace = trace
    return AdaptiveResult(
        moments=mset,
        design=design,
        unit_points=design.committed_points(),
        values=values,
        weights=weights,
        converged=converged,
        batches=batches,
    )


def two_sided_moment_check(pdf, analytic_moment, orders, scale: float | None = None) -> float:
    """Cross-check analytic fractional moments against direct quadrature
    of z^r pdf(z) over the positive axis; returns the worst relative
    discrepancy. Non-convergent quadrature raises QuadratureError.
    """
    orders = np.atleast_1d(np.asarray(orders, dtype=float))
    if scale is None:
        scale = float(analytic_moment(1.0))
    worst = 0.0
    for r in orders:
        analytic = float(analytic_moment(r))

        def integrand(z, _r=r):
            return z**_r * pdf(z)

        res_lo = quad(integrand, 0.0, 2.0 * scale, epsabs=1e-13, epsrel=1e-11,
                      limit=400, full_output=1)
        res_hi = quad(integrand, 2.0 * scale, np.inf, epsabs=1e-13, epsrel=1e-11,
                      limit=400, full_output=1)
        for res in (res_lo, res_hi):
            if len(res) > 3:
                raise QuadratureError(f"moment quadrature failed at order {r}: {res[3]}")
        numeric = res_lo[0] + res_hi[0]
        worst = max(worst, abs(numeric - analytic) / abs(analytic))
    return worst
