"""Stochastic dynamic-system testbeds and extreme-response models."""

from .duffing import DuffingConfig, duffing_response, integrate_duffing, white_noise_series
from .frame import (
    FrameConfig,
    GroundMotionSpec,
    clough_penzien_psd,
    epsd,
    frame_response,
    integrate_bouc_wen_frame,
    modulation,
    srm_ground_motion,
)
from .models import ExtremeResponseModel, make_model

__all__ = [
    "DuffingConfig",
    "white_noise_series",
    "duffing_response",
    "integrate_duffing",
    "GroundMotionSpec",
    "FrameConfig",
    "clough_penzien_psd",
    "modulation",
    "epsd",
    "srm_ground_motion",
    "frame_response",
    "integrate_bouc_wen_frame",
    "ExtremeResponseModel",
    "make_model",
]
