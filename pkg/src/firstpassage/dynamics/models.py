"""Extreme-response models: deterministic maps from physical inputs to
per-response extremes, bundled with their input marginals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..sampling import MarginalSpec
from .duffing import DuffingConfig, integrate_duffing
from .frame import FrameConfig, FrameSimulator

__all__ = ["ExtremeResponseModel", "make_model"]


@dataclass
class ExtremeResponseModel:
    """A deterministic evaluator u -> Z wrapped with input metadata.

    ``evaluate_batch`` maps an (n, n_inputs) matrix of physical inputs to
    an (n, n_responses) matrix of nonnegative extremes; evaluation must
    be pure so batches can be distributed across workers freely.
    ``convergence_index`` selects the response whose second moment drives
    the adaptive stopping rule.
    """

    name: str
    marginals: list[MarginalSpec]
    labels: list[str]
    evaluate_batch: callable
    convergence_index: int = 0
    config: object = None

    @property
    def n_inputs(self) -> int:
        return len(self.marginals)

    @property
    def n_responses(self) -> int:
        return len(self.labels)

    def evaluate(self, u) -> np.ndarray:
        """Single-realization convenience wrapper."""
        return np.asarray(self.evaluate_batch(np.atleast_2d(u)))[0]


def _duffing_model(config: DuffingConfig) -> ExtremeResponseModel:
    marginals = [
        MarginalSpec.lognormal(config.gamma_mean, config.gamma_std),
        MarginalSpec.lognormal(config.eps_mean, config.eps_std),
    ] + [MarginalSpec.normal(0.0, 1.0)] * config.n_noise

    def evaluate(u):
        return integrate_duffing(u, config)[:, None]

    return ExtremeResponseModel(
        name="duffing",
        marginals=marginals,
        labels=["displacement"],
        evaluate_batch=evaluate,
        convergence_index=0,
        config=config,
    )


def _frame_model(config: FrameConfig) -> ExtremeResponseModel:
    ns = config.n_storeys
    mass_std = config.mass_mean * config.mass_cov
    stiff_std = config.stiffness_mean * config.stiffness_cov
    marginals = (
        [MarginalSpec.lognormal(config.mass_mean, mass_std)] * ns
        + [MarginalSpec.lognormal(config.stiffness_mean, stiff_std)] * ns
        + [MarginalSpec.uniform(0.0, 2.0 * math.pi)] * config.ground_motion.n_phase
    )
    labels = [f"storey_{i + 1:02d}" for i in range(ns)] + ["max_drift"]
    sim = FrameSimulator(config)
    return ExtremeResponseModel(
        name="bouc_wen_frame",
        marginals=marginals,
        labels=labels,
        evaluate_batch=sim.evaluate,
        convergence_index=ns,  # the max-over-storeys drift
        config=config,
    )


def make_model(name: str, config=None) -> ExtremeResponseModel:
    """Build a named testbed model: ``duffing`` (3003 inputs, one tracked
    response) or ``bouc_wen_frame`` (1630 inputs, 15 storey drifts plus
    their maximum)."""
    if name == "duffing":
        return _duffing_model(config or DuffingConfig())
    if name == "bouc_wen_frame":
        return _frame_model(config or FrameConfig())
    raise ValueError(f"unknown model {name!r}; expected 'duffing' or 'bouc_wen_frame'")
