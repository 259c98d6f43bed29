"""Reference estimators: plain Monte Carlo and subset simulation.

Both work through the same model interface as the adaptive pipeline and
report a common result record so CLI output can be tabulated side by
side. Subset simulation runs in the underlying standard-normal space
with component-wise modified-Metropolis chains; its estimator COV uses
the classic chain-autocorrelation correction.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sc

from .sampling import _keyed_rng, transform_unit

__all__ = ["BaselineResult", "mcs_extremes", "mcs_pf", "subset_sim_pf"]

_EV_MCS = 21
_EV_SUS_INIT = 22
_EV_SUS_CHAIN = 23

_MCS_CHUNK = 4096  # fixed so results are independent of worker count


@dataclass
class BaselineResult:
    """Failure-probability estimate from a reference method."""

    method: str
    p_f: float
    cov: float | None
    evaluations: int
    seed: int
    threshold: float
    response: int = 0
    levels: list = field(default_factory=list)
    flag: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "p_f": self.p_f,
            "cov": self.cov,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "threshold": self.threshold,
            "response": self.response,
            "levels": self.levels,
            "flag": self.flag,
        }

    def dump_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)


def mcs_extremes(model, n: int, seed: int = 0, workers: int = 1) -> np.ndarray:
    """Plain Monte Carlo extremes, (n, n_responses).

    Inputs are drawn chunk-wise from Philox streams keyed by
    (seed, chunk index) with a fixed chunk size, so the sample set is
    identical for any worker count.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    n_chunks = (n + _MCS_CHUNK - 1) // _MCS_CHUNK

    def run_chunk(c: int) -> np.ndarray:
        lo = c * _MCS_CHUNK
        size = min(_MCS_CHUNK, n - lo)
        rng = _keyed_rng(seed, _EV_MCS, c)
        u = rng.random((size, model.n_inputs))
        return np.atleast_2d(model.evaluate_batch(transform_unit(u, model.marginals)))

    if workers <= 1 or n_chunks == 1:
        parts = [run_chunk(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, range(n_chunks)))
    return np.concatenate(parts, axis=0)


def mcs_pf(model, n: int, b_lim: float, seed: int = 0, workers: int = 1,
           response: int = 0) -> BaselineResult:
    """Monte Carlo first-passage probability: exceedance fraction at the
    threshold, with the binomial COV (undefined when no failures hit)."""
    z = mcs_extremes(model, n, seed=seed, workers=workers)[:, response]
    hits = int(np.count_nonzero(z > b_lim))
    p = hits / n
    cov = math.sqrt((1.0 - p) / (p * n)) if hits > 0 else None
    return BaselineResult(
        method="mcs", p_f=p, cov=cov, evaluations=n, seed=seed,
        threshold=b_lim, response=response,
        flag=None if hits else "no-failures",
    )


def _sus_evaluate(model, xi: np.ndarray, response: int) -> np.ndarray:
    u = transform_unit(_sc.ndtr(xi), model.marginals)
    return np.atleast_2d(model.evaluate_batch(u))[:, response]


def _chain_gamma(ind: np.ndarray) -> float:
    """Au-Beck autocorrelation factor for indicator samples arranged as
    (n_chains, chain_length)."""
    n_c, length = ind.shape
    n = ind.size
    p = ind.mean()
    r0 = p - p * p
    if r0 <= 0.0 or length < 2:
        return 0.0
    gamma = 0.0
    for k in range(1, length):
        rk = np.mean(ind[:, : length - k] * ind[:, k:]) - p * p
        gamma += 2.0 * (1.0 - k * n_c / n) * rk / r0
    return max(gamma, 0.0)


def subset_sim_pf(model, b_lim: float, n_per_level: int = 1000, p0: float = 0.1,
                  seed: int = 0, response: int = 0, level_cap: int = 20,
                  proposal_halfwidth: float = 1.0) -> BaselineResult:
    """Subset simulation with component-wise modified Metropolis chains.

    Intermediate thresholds sit at the (1 - p0) sample quantile; each
    level's top n*p0 samples seed chains grown to 1/p0 states with a
    uniform +-halfwidth proposal in standard-normal space. Unchanged
    candidates skip the model call. The estimator COV combines the
    binomial level-0 term with autocorrelation-corrected conditional
    terms.
    """
    if not 0.0 < p0 < 1.0:
        raise ValueError("p0 must lie in (0, 1)")
    n_seed = n_per_level * p0
    if abs(n_seed - round(n_seed)) > 1e-9:
        raise ValueError("n_per_level * p0 must be an integer")
    n_seed = int(round(n_seed))
    chain_len = n_per_level // n_seed

    d = model.n_inputs
    rng0 = _keyed_rng(seed, _EV_SUS_INIT)
    xi = rng0.standard_normal((n_per_level, d))
    z = _sus_evaluate(model, xi, response)
    evaluations = n_per_level

    levels = []
    cov_sq = 0.0
    p_f = None
    flag = None
    for level in range(level_cap + 1):
        hits = np.count_nonzero(z > b_lim)
        p_cond = hits / n_per_level
        if p_cond >= p0 or level == level_cap:
            if level > 0:
                ind = (z > b_lim).astype(float).reshape(n_seed, chain_len)
                gamma = _chain_gamma(ind)
            else:
                gamma = 0.0
            if hits > 0:
                cov_sq += (1.0 - p_cond) / (p_cond * n_per_level) * (1.0 + gamma)
                p_f = p0**level * p_cond
            else:
                p_f = 0.0
                flag = "threshold-unreached" if level == level_cap else "no-failures"
            levels.append({"level": level, "threshold": b_lim, "p_cond": p_cond,
                           "final": True})
            break

        # intermediate threshold and seeds
        order = np.argsort(z)[::-1]
        t = float(z[order[n_seed - 1]])
        seeds_xi = xi[order[:n_seed]]
        seeds_z = z[order[:n_seed]]
        ind_level = (z > t).astype(float)
        if level > 0:
            gamma = _chain_gamma(ind_level.reshape(n_seed, chain_len))
        else:
            gamma = 0.0
        cov_sq += (1.0 - p0) / (p0 * n_per_level) * (1.0 + gamma)
        levels.append({"level": level, "threshold": t, "p_cond": p0, "final": False})

        # grow chains: state arrays (n_seed,), chain_len - 1 fresh states each
        chain_xi = np.empty((n_seed, chain_len, d))
        chain_z = np.empty((n_seed, chain_len))
        chain_xi[:, 0] = seeds_xi
        chain_z[:, 0] = seeds_z
        cur_xi = seeds_xi.copy()
        cur_z = seeds_z.copy()
        rng = _keyed_rng(seed, _EV_SUS_CHAIN, level)
        accepted = 0
        for step in range(1, chain_len):
            prop = cur_xi + rng.uniform(-proposal_halfwidth, proposal_halfwidth,
                                        size=cur_xi.shape)
            # component-wise accept with standard-normal density ratio
            ratio = np.exp(0.5 * (cur_xi**2 - prop**2))
            comp_acc = rng.random(cur_xi.shape) < ratio
            cand = np.where(comp_acc, prop, cur_xi)
            moved = np.any(comp_acc, axis=1)
            if np.any(moved):
                z_cand = np.full(n_seed, -np.inf)
                z_cand[moved] = _sus_evaluate(model, cand[moved], response)
                evaluations += int(np.count_nonzero(moved))
                take = moved & (z_cand > t)
            else:
                take = np.zeros(n_seed, dtype=bool)
            cur_xi = np.where(take[:, None], cand, cur_xi)
            cur_z = np.where(take, z_cand, cur_z)
            accepted += int(np.count_nonzero(take))
            chain_xi[:, step] = cur_xi
            chain_z[:, step] = cur_z
        levels[-1]["accept_rate"] = accepted / max((chain_len - 1) * n_seed, 1)
        xi = chain_xi.reshape(n_per_level, d)
        z = chain_z.reshape(n_per_level)

    cov = math.sqrt(cov_sq) if p_f and p_f > 0 else None
    return BaselineResult(
        method="sus", p_f=float(p_f), cov=cov, evaluations=evaluations,
        seed=seed, threshold=b_lim, response=response, levels=levels, flag=flag,
    )
