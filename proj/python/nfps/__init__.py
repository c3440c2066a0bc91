# Copyright 2026 The nfps Authors
# SPDX-License-Identifier: Apache-2.0
"""Near-field photometric stereo: rendering, observation maps, regression and integration."""

from ._core import (
    Calibration,
    Camera,
    DomainError,
    PointLight,
    angular_loss,
    cli,
    evaluate,
    luces_like_lights,
    observe,
    reconstruct,
    render_sphere,
    ring_lights,
    sample_record,
    set_threads,
)

__all__ = [
    "Calibration",
    "Camera",
    "DomainError",
    "PointLight",
    "angular_loss",
    "cli",
    "evaluate",
    "luces_like_lights",
    "observe",
    "reconstruct",
    "render_sphere",
    "ring_lights",
    "sample_record",
    "set_threads",
]
