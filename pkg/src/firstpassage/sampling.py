"""Latinized stratified sampling with hierarchical refinement (RLSS).

The design lives on the unit hypercube and is tracked on an exact integer
grid: after ``level`` refinements with factor ``delta`` there are
``N (delta+1)^level`` one-dimensional LHS bins per dimension and the same
number of sample slots, each slot owning one congruent hyper-rectangular
stratum (a grid cell). Refinement subdivides every 1-D bin into
``delta+1`` sub-bins (existing coordinates keep their sub-bin, empty
sub-bins receive fresh uniform candidate coordinates) and splits every
stratum along its largest side, assembling candidate samples so the
Latin-hypercube marginal property is preserved at every stage.

Sample-size extension promotes candidates to committed samples in batches
and reallocates the committed weights so they always sum to one: each
committed sample carries its own cell mass plus the mass of all
not-yet-committed candidate cells carved out of its territory.

All randomness is drawn from counter-based Philox streams keyed by
(seed, event kind, refinement level), so a design is bit-reproducible
independent of batch schedule or worker count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sc

__all__ = [
    "MarginalSpec",
    "Stratum",
    "RlssDesign",
    "lss_init",
    "to_physical",
    "transform_unit",
    "weighted_bootstrap_cov",
]

_UNIT_CLIP = 1e-15  # unit-cube coordinates are clamped this far from {0, 1}

# event kinds for RNG stream keying
_EV_INIT_COORD = 1
_EV_INIT_PAIR = 2
_EV_REFINE_COORD = 3
_EV_ASSEMBLE = 4
_EV_SELECT = 5
_EV_BOOTSTRAP = 6


def _fold64(*vals: int) -> int:
    """splitmix64-style fold of small integers into one 64-bit key."""
    h = 0x9E3779B97F4A7C15
    for v in vals:
        h = (h ^ (v & 0xFFFFFFFFFFFFFFFF)) * 0xBF58476D1CE4E5B9 % (1 << 64)
        h = (h ^ (h >> 31)) * 0x94D049BB133111EB % (1 << 64)
        h ^= h >> 29
    return h


def _keyed_rng(seed: int, *tags: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, _fold64(*tags)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ----------------------------------------------------------------------
# Input marginals and the isoprobabilistic transform
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MarginalSpec:
    """One input marginal: uniform[lo, hi], normal(mu, sigma), or a
    lognormal parameterized by its (mean, std) in physical units."""

    family: str
    p1: float
    p2: float

    def __post_init__(self):
        if self.family == "uniform":
            if not self.p1 < self.p2:
                raise ValueError("uniform marginal requires lo < hi")
        elif self.family == "normal":
            if not self.p2 > 0.0:
                raise ValueError("normal marginal requires sigma > 0")
        elif self.family == "lognormal":
            if not (self.p1 > 0.0 and self.p2 > 0.0):
                raise ValueError("lognormal marginal requires mean > 0 and std > 0")
        else:
            raise ValueError(f"unknown marginal family {self.family!r}")

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "MarginalSpec":
        return cls("uniform", float(lo), float(hi))

    @classmethod
    def normal(cls, mu: float, sigma: float) -> "MarginalSpec":
        return cls("normal", float(mu), float(sigma))

    @classmethod
    def lognormal(cls, mean: float, std: float) -> "MarginalSpec":
        return cls("lognormal", float(mean), float(std))

    def log_params(self) -> tuple[float, float]:
        """(mu_ln, sigma_ln) of the underlying normal for a lognormal."""
        mean, std = self.p1, self.p2
        mu_ln = math.log(mean**2 / math.sqrt(std**2 + mean**2))
        sigma_ln = math.sqrt(math.log(1.0 + std**2 / mean**2))
        return mu_ln, sigma_ln

    def ppf(self, p):
        """Inverse CDF, vectorized over p in (0, 1)."""
        p = np.asarray(p, dtype=float)
        if self.family == "uniform":
            return self.p1 + p * (self.p2 - self.p1)
        if self.family == "normal":
            return self.p1 + self.p2 * _sc.ndtri(p)
        mu_ln, sigma_ln = self.log_params()
        return np.exp(mu_ln + sigma_ln * _sc.ndtri(p))

    def to_dict(self) -> dict:
        return {"family": self.family, "p1": self.p1, "p2": self.p2}

    @classmethod
    def from_dict(cls, d: dict) -> "MarginalSpec":
        return cls(d["family"], float(d["p1"]), float(d["p2"]))


def to_physical(point, marginals) -> np.ndarray:
    """Map one unit-cube point to physical space through the marginal
    inverse CDFs. Coordinates at exactly 0 or 1 are clamped to
    [1e-15, 1 - 1e-15] before the transform."""
    point = np.asarray(point, dtype=float)
    if point.shape != (len(marginals),):
        raise ValueError("point dimension does not match number of marginals")
    return transform_unit(point[None, :], marginals)[0]


def transform_unit(points, marginals) -> np.ndarray:
    """Vectorized inverse-CDF transform of (n, n_s) unit-cube points.

    Runs of identical marginals are transformed as one block, which
    matters when thousands of inputs share a distribution.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != len(marginals):
        raise ValueError("points must be (n, n_s) matching the marginals")
    p = np.clip(points, _UNIT_CLIP, 1.0 - _UNIT_CLIP)
    out = np.empty_like(p)
    i = 0
    n_s = len(marginals)
    while i < n_s:
        j = i + 1
        while j < n_s and marginals[j] == marginals[i]:
            j += 1
        out[:, i:j] = marginals[i].ppf(p[:, i:j])
        i = j
    return out


# ----------------------------------------------------------------------
# Strata and the sequential design
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Stratum:
    """A hyper-rectangular stratum [origin, origin + lengths)."""

    origin: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float)
        l = np.asarray(self.lengths, dtype=float)
        if o.shape != l.shape or o.ndim != 1:
            raise ValueError("origin and lengths must be 1-D of equal size")
        if np.any(l <= 0.0) or np.any(l > 1.0):
            raise ValueError("side lengths must lie in (0, 1]")
        if np.any(o < 0.0) or np.any(o + l > 1.0 + 1e-12):
            raise ValueError("stratum must lie inside the unit cube")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "lengths", l)

    @property
    def weight(self) -> float:
        """Probability mass: the product of the side lengths."""
        return float(np.prod(self.lengths))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.origin) and np.all(x < self.origin + self.lengths + 1e-12))


def _balanced_factors(n: int, n_s: int) -> np.ndarray:
    """Split n into n_s integer factors as evenly as possible (largest
    prime factors assigned to the emptiest dimensions)."""
    factors = np.ones(n_s, dtype=np.int64)
    primes = []
    m, d = n, 2
    while d * d <= m:
        while m % d == 0:
            primes.append(d)
            m //= d
        d += 1
    if m > 1:
        primes.append(m)
    for prime in sorted(primes, reverse=True):
        factors[np.argmin(factors)] *= prime
    return factors


@dataclass
class RlssDesign:
    """Sequentially extensible Latinized stratified design on [0,1)^n_s.

    Mutation (refine / extend) is single-writer; snapshots returned by
    the accessor methods are plain arrays safe for concurrent reads.
    """

    n_s: int
    n_init: int
    delta: int
    seed: int
    level: int = 0
    factors: np.ndarray = field(default=None, repr=False)
    grid: np.ndarray = field(default=None, repr=False)
    n_bins: int = 0
    coord_val: np.ndarray = field(default=None, repr=False)
    cells: np.ndarray = field(default=None, repr=False)
    point_bins: np.ndarray = field(default=None, repr=False)
    committed: np.ndarray = field(default=None, repr=False)
    donor: np.ndarray = field(default=None, repr=False)
    delivery: list = field(default_factory=list, repr=False)
    delivered: int = 0
    batches: int = 0

    # -- accessors ------------------------------------------------------

    @property
    def n_slots(self) -> int:
        return self.cells.shape[0]

    @property
    def n_candidates(self) -> int:
        return int(np.count_nonzero(~self.committed))

    def points(self) -> np.ndarray:
        """Sample coordinates of every slot, shape (n_slots, n_s)."""
        dims = np.arange(self.n_s)
        return self.coord_val[dims[None, :], self.point_bins]

    def committed_points(self) -> np.ndarray:
        """Delivered sample points in delivery order."""
        idx = np.array(self.delivery[: self.delivered], dtype=np.int64)
        return self.points()[idx]

    def committed_weights(self) -> np.ndarray:
        """Estimator weights of delivered samples (sum to 1): own cell
        mass plus the mass of chained uncommitted candidate cells."""
        root = np.arange(self.n_slots)
        donor = self.donor
        committed = self.committed
        cur = np.where(committed, root, donor)
        for _ in range(self.level + 2):
            nxt = np.where(committed[cur], cur, donor[cur])
            if np.array_equal(nxt, cur):
                break
            cur = nxt
        counts = np.bincount(cur[~committed], minlength=self.n_slots)
        cell_mass = 1.0 / self.n_slots
        w_all = (1.0 + counts) * cell_mass
        idx = np.array(self.delivery[: self.delivered], dtype=np.int64)
        return w_all[idx]

    def committed_strata(self) -> list[Stratum]:
        """Geometric cells of the delivered samples, in delivery order."""
        lengths = 1.0 / self.grid.astype(float)
        idx = self.delivery[: self.delivered]
        return [Stratum(self.cells[k] * lengths, lengths.copy()) for k in idx]

    # -- construction ---------------------------------------------------

    @classmethod
    def initialize(cls, n_init: int, n_s: int, seed: int, delta: int = 1) -> "RlssDesign":
        if n_init < 1 or n_s < 1:
            raise ValueError("need n_init >= 1 and n_s >= 1")
        if delta < 1:
            raise ValueError("refinement factor delta must be >= 1")
        self = cls(n_s=n_s, n_init=n_init, delta=delta, seed=int(seed))
        self.factors = _balanced_factors(n_init, n_s)
        self.grid = self.factors.copy()
        self.n_bins = n_init

        rng_c = _keyed_rng(self.seed, _EV_INIT_COORD)
        u = rng_c.random((n_s, n_init))
        self.coord_val = (np.arange(n_init)[None, :] + u) / n_init

        # grid cells of the initial equal-weight stratification
        cols = np.unravel_index(np.arange(n_init), tuple(self.factors))
        self.cells = np.stack(cols, axis=1).astype(np.int64)

        # Latinized pairing: within each grid column of each dimension,
        # assign the column's bins to the column's cells at random.
        rng_p = _keyed_rng(self.seed, _EV_INIT_PAIR)
        rand = rng_p.random((n_s, n_init))
        self.point_bins = np.empty((n_init, n_s), dtype=np.int64)
        for i in range(n_s):
            order = np.argsort(self.cells[:, i] + rand[i], kind="stable")
            self.point_bins[order, i] = np.arange(n_init)

        self.committed = np.ones(n_init, dtype=bool)
        self.donor = np.full(n_init, -1, dtype=np.int64)
        self.delivery = []
        return self

    # -- refinement -----------------------------------------------------

    def refine(self):
        """One hierarchical refinement: subdivide every 1-D bin and every
        stratum, then assemble candidate samples preserving the LHS
        marginal property."""
        self.level += 1
        d1 = self.delta + 1
        n_old_bins = self.n_bins
        n_new_bins = n_old_bins * d1
        n_s, m_old = self.n_s, self.n_slots

        # --- refine 1-D bins; existing coordinates keep their sub-bin
        rng_c = _keyed_rng(self.seed, _EV_REFINE_COORD, self.level)
        u = rng_c.random((n_s, n_new_bins))
        new_coord = (np.arange(n_new_bins)[None, :] + u) / n_new_bins
        sub = np.floor(self.coord_val * n_new_bins).astype(np.int64)
        base = np.arange(n_old_bins)[None, :] * d1
        keep = base + np.clip(sub - base, 0, d1 - 1)  # guard fp rounding at bin edges
        dims = np.arange(n_s)
        new_coord[dims[:, None], keep] = self.coord_val
        self.coord_val = new_coord
        # re-index existing sample bins into the refined bin numbering
        self.point_bins = keep[dims[None, :], self.point_bins]
        self.n_bins = n_new_bins

        # --- split every stratum along its largest side (lowest dim on ties)
        s = int(np.argmin(self.grid))
        self.grid = self.grid.copy()
        self.grid[s] *= d1
        bins_per_col_s = n_new_bins // int(self.grid[s])
        child_col = self.point_bins[:, s] // bins_per_col_s
        old_child = self.cells[:, s] * d1

        new_cells = []
        new_donor = []
        for j in range(d1):
            take = child_col != old_child + j  # strata not inheriting the sample
            rows = np.nonzero(take)[0]
            cells_j = self.cells[rows].copy()
            cells_j[:, s] = old_child[rows] + j
            new_cells.append(cells_j)
            new_donor.append(rows)
        self.cells[:, s] = child_col
        add_cells = np.concatenate(new_cells, axis=0)
        add_donor = np.concatenate(new_donor, axis=0)
        n_new = add_cells.shape[0]

        first_new = m_old
        self.cells = np.concatenate([self.cells, add_cells], axis=0)
        self.donor = np.concatenate([self.donor, add_donor.astype(np.int64)])
        self.committed = np.concatenate([self.committed, np.zeros(n_new, dtype=bool)])
        add_bins = np.full((n_new, n_s), -1, dtype=np.int64)
        self.point_bins = np.concatenate([self.point_bins, add_bins], axis=0)

        # --- assemble candidate samples dimension by dimension: free bins
        # and new strata pair up column by column (forced when a column
        # holds a single free bin, uniformly at random otherwise)
        bound = np.zeros((n_s, n_new_bins), dtype=bool)
        bound[dims[:, None], self.point_bins[:m_old].T] = True
        avail = np.nonzero(~bound)[1].reshape(n_s, n_new_bins - m_old)
        if avail.shape[1] != n_new:
            raise RuntimeError("candidate bins do not match candidate strata")

        bins_per_col = (n_new_bins // self.grid).astype(np.int64)
        avail_col = avail // bins_per_col[:, None]
        slot_col = self.cells[first_new:].T  # (n_s, n_new)

        rng_a = _keyed_rng(self.seed, _EV_ASSEMBLE, self.level)
        rand_a = rng_a.random((n_s, n_new))
        rand_s = rng_a.random((n_s, n_new))
        order_a = np.argsort(avail_col + rand_a, axis=1, kind="stable")
        order_s = np.argsort(slot_col + rand_s, axis=1, kind="stable")
        if not np.array_equal(
            np.take_along_axis(avail_col, order_a, axis=1),
            np.take_along_axis(slot_col, order_s, axis=1),
        ):
            raise RuntimeError("column mismatch while assembling candidate samples")
        target = first_new + order_s
        values = np.take_along_axis(avail, order_a, axis=1)
        self.point_bins[target, dims[:, None]] = values

    # -- sequential extension --------------------------------------------

    def extend(self, batch: int) -> np.ndarray:
        """Commit a batch of samples and return their indices in delivery
        order. The first batch must be at least the initial design size
        and includes the initial samples; refinement happens automatically
        whenever the candidate pool runs short."""
        if batch < 1:
            raise ValueError("batch size must be >= 1")
        self.batches += 1
        if self.delivered == 0:
            if batch < self.n_init:
                raise ValueError("first batch must be >= the initial design size")
            need = batch - self.n_init
        else:
            need = batch
        while self.n_candidates < need:
            self.refine()
        if need > 0:
            cand = np.nonzero(~self.committed)[0]
            rng = _keyed_rng(self.seed, _EV_SELECT, self.batches)
            pick = rng.choice(cand.size, size=need, replace=False)
            chosen = np.sort(cand[pick])
            self.committed[chosen] = True
        else:
            chosen = np.empty(0, dtype=np.int64)
        if self.delivered == 0:
            new_ids = list(range(self.n_init)) + chosen.tolist()
        else:
            new_ids = chosen.tolist()
        self.delivery.extend(new_ids)
        self.delivered += len(new_ids)
        return np.array(new_ids, dtype=np.int64)

    # -- audit dump -------------------------------------------------------

    def to_json_dict(self) -> dict:
        """Design state for audit/plotting: delivered samples with their
        cells and current estimator weights."""
        pts = self.committed_points()
        w = self.committed_weights()
        lengths = (1.0 / self.grid.astype(float)).tolist()
        samples = []
        for k, slot in enumerate(self.delivery[: self.delivered]):
            origin = (self.cells[slot] / self.grid.astype(float)).tolist()
            samples.append(
                {"point": pts[k].tolist(), "origin": origin,
                 "lengths": lengths, "weight": float(w[k])}
            )
        return {"dimension": self.n_s, "level": self.level, "samples": samples}

    def dump_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)


def lss_init(n_init: int, n_s: int, seed: int, delta: int = 1) -> RlssDesign:
    """Initial Latinized stratified design: n_init equal-weight strata
    aligned with the LHS bins, one sample in each."""
    return RlssDesign.initialize(n_init, n_s, seed, delta)


def hlhs_refine(design: RlssDesign, delta: int | None = None) -> RlssDesign:
    """Hierarchical refinement of the candidate pool (in place; returned
    for convenience). ``delta`` other than the design's factor is not
    supported: the nesting structure fixes it at construction."""
    if delta is not None and delta != design.delta:
        raise ValueError("refinement factor is fixed at design construction")
    design.refine()
    return design


def rlss_extend(design: RlssDesign, batch: int) -> np.ndarray:
    """Commit ``batch`` new samples and return their unit-cube points."""
    ids = design.extend(batch)
    dims = np.arange(design.n_s)
    return design.coord_val[dims[None, :], design.point_bins[ids]]


# ----------------------------------------------------------------------
# Weighted bootstrap
# ----------------------------------------------------------------------

def weighted_bootstrap_cov(values, weights, order: float, n_boot: int = 100,
                           seed: int = 0) -> float:
    """Coefficient of variation of the weighted fractional-moment
    estimator by weighted bootstrap.

    Resamples of the committed size are drawn with selection probability
    proportional to the weights (with replacement); each replicate is the
    plain average of the resampled values raised to ``order``, whose
    expectation is the weighted estimator itself.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape or values.ndim != 1:
        raise ValueError("values and weights must be 1-D of equal length")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    if float(order) != int(order) and np.any(values <= 0.0):
        k = int(np.argmax(values <= 0.0))
        raise ValueError(f"sample {k} is non-positive; fractional order {order} undefined")
    n = values.size
    rng = _keyed_rng(seed, _EV_BOOTSTRAP)
    idx = rng.choice(n, size=(n_boot, n), replace=True, p=weights)
    reps = np.mean(values[idx] ** order, axis=1)
    mean = reps.mean()
    if mean == 0.0:
        return 0.0
    return float(reps.std(ddof=1) / mean)
