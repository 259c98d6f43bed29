"""Reliability outputs assembled from fitted extreme-value models:
first-passage probabilities, exceedance curves, equivalent extreme-value
combination of multiple responses, and the serializable run report."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import MixtureParams, curve_table, mixture_poe
from .fitting import FitResult

__all__ = [
    "first_passage",
    "equivalent_extreme",
    "curve_grid",
    "default_curve_bounds",
    "ResponseReport",
    "ReliabilityReport",
]

SCHEMA_VERSION = 1


def first_passage(fit: MixtureParams, b_lim: float) -> float:
    """P{Z > b_lim} = 1 - F_Z(b_lim) under the fitted mixture."""
    if b_lim < 0.0:
        raise ValueError("threshold must be nonnegative")
    return float(mixture_poe(b_lim, fit))


def equivalent_extreme(responses, thresholds) -> np.ndarray:
    """Combine per-response extremes into one equivalent extreme with a
    unit threshold: Z_eq = max_i Z_i / b_i, so the compound event
    {any Z_i > b_i} is exactly {Z_eq > 1}."""
    responses = np.asarray(responses, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    if np.any(thresholds <= 0.0):
        raise ValueError("all thresholds must be positive")
    if responses.shape[-1] != thresholds.shape[0]:
        raise ValueError("one threshold per response is required")
    return np.max(responses / thresholds, axis=-1)


def default_curve_bounds(mean: float, m2: float, floor_poe: float = 1e-7) -> tuple[float, float]:
    """Default z-range for exceedance curves: a decade below the mean up
    to the Markov-bound abscissa where POE could still reach floor_poe."""
    return mean / 10.0, math.sqrt(m2 / floor_poe)


def curve_grid(fit: MixtureParams, z_min: float, z_max: float, n_points: int = 400,
               log_spacing: bool = True) -> np.ndarray:
    """Tabulated (z, pdf, cdf, poe) curves of a fitted mixture."""
    if not 0.0 < z_min < z_max:
        raise ValueError("need 0 < z_min < z_max")
    if n_points < 2:
        raise ValueError("need at least two grid points")
    if log_spacing:
        z = np.geomspace(z_min, z_max, n_points)
    else:
        z = np.linspace(z_min, z_max, n_points)
    return curve_table(fit, z)


@dataclass
class ResponseReport:
    """Fit and first-passage summary for one tracked response."""

    label: str
    moments_orders: list
    moments: list
    mean: float
    std: float
    fit: FitResult
    thresholds: list  # [[b_lim, p_f], ...]

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "moments_orders": list(self.moments_orders),
            "moments": list(self.moments),
            "mean": self.mean,
            "std": self.std,
            "fit": self.fit.to_json_dict(),
            "thresholds": [[b, p] for b, p in self.thresholds],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ResponseReport":
        return cls(
            label=d["label"],
            moments_orders=list(d["moments_orders"]),
            moments=list(d["moments"]),
            mean=float(d["mean"]),
            std=float(d["std"]),
            fit=FitResult.from_json_dict(d["fit"]),
            thresholds=[(float(b), float(p)) for b, p in d["thresholds"]],
        )


@dataclass
class ReliabilityReport:
    """Everything one pipeline run produced, serializable and
    self-validating: stored first-passage probabilities are recomputed
    from the stored fits on load."""

    model: str
    config: dict
    config_hash: str
    seed: int
    evaluations: int
    converged: bool
    batches: int
    convergence_trace: list  # rows (batch, samples, M1, M2, cov_M2)
    responses: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_json_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "model": self.model,
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "evaluations": self.evaluations,
            "converged": bool(self.converged),
            "batches": self.batches,
            "convergence_trace": [list(row) for row in self.convergence_trace],
            "responses": [r.to_json_dict() for r in self.responses],
        }

    def dump_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, d: dict, validate: bool = True) -> "ReliabilityReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        rep = cls(
            model=d["model"],
            config=d["config"],
            config_hash=d["config_hash"],
            seed=int(d["seed"]),
            evaluations=int(d["evaluations"]),
            converged=bool(d["converged"]),
            batches=int(d["batches"]),
            convergence_trace=[tuple(row) for row in d["convergence_trace"]],
            responses=[ResponseReport.from_json_dict(r) for r in d["responses"]],
        )
        if validate:
            rep.validate()
        return rep

    @classmethod
    def load_json(cls, path, validate: bool = True) -> "ReliabilityReport":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh), validate=validate)

    def validate(self):
        """Recompute each stored first-passage probability from its fit."""
        for resp in self.responses:
            for b_lim, p_f in resp.thresholds:
                again = first_passage(resp.fit.params, b_lim)
                if not (0.0 <= p_f <= 1.0):
                    raise ValueError(f"stored p_f out of range for {resp.label}")
                if abs(again - p_f) > 1e-12:
                    raise ValueError(
                        f"stored p_f {p_f:.16g} at b={b_lim} for {resp.label} "
                        f"does not reproduce ({again:.16g})"
                    )
