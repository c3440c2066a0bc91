# Copyright 2026 The nfps Authors
# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest

import nfps


def test_angular_loss():
    assert nfps.angular_loss([0, 0, -1], [0, 0, -1]) == pytest.approx(0.0, abs=1e-12)
    assert nfps.angular_loss([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)
    assert nfps.angular_loss([2, 0, 0], [1, 0, 0]) == pytest.approx(0.0, abs=1e-12)


def test_calibration_text_round_trip():
    cal = nfps.Calibration()
    cal.camera = nfps.Camera.from_normalized(3.125, 64, 64)
    cal.lights = nfps.ring_lights(15, 0.10, 0.05, 1.0)
    back = nfps.Calibration.from_text(cal.to_text())
    assert back.to_text() == cal.to_text()
    assert len(back.lights) == 15
    np.testing.assert_array_equal(back.lights[3].position, cal.lights[3].position)


def test_luces_like_lights():
    lights = nfps.luces_like_lights(0.05, 1.0)
    assert len(lights) == 52
    assert all(abs(np.linalg.norm(l.direction) - 1.0) < 1e-12 for l in lights)


def test_sample_record_clean_lambertian():
    r = nfps.sample_record(3, 7, materials="lambertian", gi=False, perturb=False, quant_bits=0, d=16)
    assert r["map"].shape == (6, 16, 16)
    assert np.all(r["map"][:3] >= 0)
    assert np.linalg.norm(r["target"]) == pytest.approx(1.0)
    assert nfps.angular_loss(r["lambertian"], r["target"]) < math.radians(0.5)
    again = nfps.sample_record(3, 7, materials="lambertian", gi=False, perturb=False, quant_bits=0, d=16)
    np.testing.assert_array_equal(again["map"], r["map"])


def test_observe_rejects_bad_shapes():
    lights = nfps.ring_lights(4, 0.1, 0.05, 1.0)
    with pytest.raises(ValueError):
        nfps.observe(np.zeros((4, 2)), [0, 0, 0.3], lights)
    m = nfps.observe(np.full((4, 3), 0.1), [0, 0, 0.3], lights, d=8)
    assert m.shape == (6, 8, 8)


def test_sphere_reconstruction():
    cam = nfps.Camera.from_normalized(3.125, 64, 64)
    cal = nfps.Calibration()
    cal.camera = cam
    cal.lights = nfps.ring_lights(15, 0.10, 0.05, 1.0)
    scene = nfps.render_sphere(cam, cal.lights)
    assert scene["images"].shape == (15, 64, 64, 3)
    mask = scene["mask"]
    mean_depth = float(scene["depth"][mask.astype(bool)].mean())
    rec = nfps.reconstruct(scene["images"], mask, cal, mean_distance=mean_depth)
    assert len(rec["normal_change_deg"]) == 2
    assert rec["normal_change_deg"][1] < rec["normal_change_deg"][0]
    ev = nfps.evaluate(cam, rec["depth"], rec["normals"], scene["depth"], scene["normals"], mask)
    assert ev["mze_mm"] < 3.0
    assert ev["mae_deg"] < 3.0


def test_empty_mask_is_a_domain_error():
    cam = nfps.Camera.from_normalized(3.125, 16, 16)
    cal = nfps.Calibration()
    cal.camera = cam
    cal.lights = nfps.ring_lights(15, 0.10, 0.05, 1.0)
    images = np.zeros((15, 16, 16, 3))
    with pytest.raises(ValueError):
        nfps.reconstruct(images, np.zeros((16, 16), dtype=np.uint8), cal, mean_distance=0.3)


def test_cli_help_and_usage_error(capfd):
    assert nfps.cli(["render", "--help"]) == 0
    assert nfps.cli(["render"]) == 2
    out, err = capfd.readouterr()
    assert "--out" in out
