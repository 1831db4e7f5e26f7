import math

import numpy as np
import pytest

import lipkit


def face(mar=0.1):
    pts = np.zeros((68, 2))
    # Jaw and brows spread over a 200x300 box starting at (156, 100).
    for i in range(17):
        pts[i] = (156 + 200 * i / 16, 100 + 300 * (0.3 + 0.7 * math.sin(math.pi * i / 16)))
    for i in range(17, 68):
        pts[i] = (200 + (i % 10) * 10, 150 + (i % 7) * 10)
    pts[30] = (256, 280)  # nose tip
    for i in range(48, 68):
        angle = 2 * math.pi * (i - 48) / 20
        pts[i] = (246 + 20 * math.cos(angle), 340 + 8 * math.sin(angle))
    pts[48] = (226, 340)
    pts[54] = (266, 340)
    pts[62] = (246, 340 - 20 * mar)
    pts[66] = (246, 340 + 20 * mar)
    return pts


def test_mar_boundary():
    assert lipkit.mouth_aspect_ratio(face(0.25)) == pytest.approx(0.25, abs=1e-15)
    frames = np.stack([face(0.1), face(0.4), face(0.5), face(0.2)])
    assert lipkit.lipleak(frames) == 0.5
    sweep = lipkit.lipleak_sweep(frames, [0.1, 0.3, 0.45])
    assert sweep == [0.75, 0.5, 0.25]


def test_masks_and_blend():
    mask = lipkit.build_mask(face(), 512, 512)
    assert mask.shape == (512, 512)
    assert mask.dtype == np.uint8
    assert mask.any()
    occ = np.zeros_like(mask)
    occ[:, :256] = 1
    refined = lipkit.refine_with_occlusion(mask, occ)
    assert np.array_equal(refined.astype(bool), mask.astype(bool) & ~occ.astype(bool))
    latent = lipkit.downsample_to_latent(mask, 8)
    assert latent.shape == (64, 64)

    rng = np.random.default_rng(0)
    clean = rng.normal(size=(2, 3, 64, 64))
    noised = rng.normal(size=(2, 3, 64, 64))
    out = lipkit.blend_latents(clean, noised, latent)
    keep = ~latent.astype(bool)
    assert np.array_equal(out[:, :, keep], clean[:, :, keep])
    assert np.array_equal(out[:, :, ~keep], noised[:, :, ~keep])


def test_edm_and_guidance():
    c = lipkit.edm_coefficients(0.5, 0.5)
    assert c["c_skip"] == pytest.approx(0.5)
    assert c["c_out"] == pytest.approx(0.353553, abs=1e-6)
    assert c["c_in"] == pytest.approx(1.414214, abs=1e-6)
    assert c["loss_weight"] == pytest.approx(8.0)
    sig = lipkit.karras_sigmas(10, 0.02, 10.0)
    assert len(sig) == 11 and sig[-1] == 0.0 and sig[0] == pytest.approx(10.0)

    rng = np.random.default_rng(1)
    e, i, a = (rng.normal(size=(2, 1, 4, 4)) for _ in range(3))
    assert np.array_equal(lipkit.guided_combine(e, i, a, w_aud=1.0, w_id=1.0), a)
    np.testing.assert_allclose(lipkit.guided_combine(e, i, a), e + 2 * (i - e) + 5 * (a - i), atol=1e-12)


def test_variance_of_laplacian():
    assert lipkit.variance_of_laplacian(np.full((16, 16), 80.0)) == 0.0
    board = (np.indices((16, 16)).sum(axis=0) % 2) * 255.0
    assert lipkit.variance_of_laplacian(board) > 0.0


def test_elo():
    table = lipkit.elo_ratings([{"model_a": "A", "model_b": "B", "winner": "A"}])
    assert table["A"]["rating"] == 1016.0
    assert table["B"]["rating"] == 984.0
    with pytest.raises(lipkit.LipkitError):
        lipkit.elo_ratings([{"model_a": "A", "model_b": "A", "winner": "A"}])
    records = [{"model_a": "X", "model_b": "Y", "winner": "A"}] * 30 + [
        {"model_a": "Y", "model_b": "X", "winner": "B"}
    ] * 30
    boot = lipkit.bootstrap_elo(records, rounds=200, seed=3)
    assert boot["X"]["ci_low"] > boot["Y"]["ci_high"]
    assert boot == lipkit.bootstrap_elo(records, rounds=200, seed=3)
    rates = lipkit.win_rate_matrix(records)
    assert rates[("X", "Y")] == 1.0 and rates[("Y", "X")] == 0.0


def test_curate():
    def entry(vid, quality, asd):
        return {
            "video_id": vid,
            "fps": 25,
            "audio_hz": 16000,
            "audio_channels": 1,
            "duration_s": 5.0,
            "scene_spans": [[0, 2], [2, 5]],
            "quality_scores": [quality] * 9,
            "asd_score": asd,
        }

    report = lipkit.curate(
        {"dataset_name": "t", "entries": [entry("a", 0.40, 0.75), entry("b", 0.39, 0.9), entry("c", 0.5, 0.74)]}
    )
    assert {k["video_id"] for k in report["kept"]} == {"a"}
    assert report["stats"]["discarded_videos"] == 2
    with pytest.raises(lipkit.LipkitError):
        lipkit.curate({"dataset_name": "t", "entries": [entry("a", 0.5, 0.9), entry("a", 0.5, 0.9)]})


def test_simulate_small():
    out = lipkit.simulate({"steps": 30, "T": 3, "S": 4, "sample_steps": 3, "hidden": 16, "clips": 3})
    assert len(out["losses"]) == 30
    assert out["unmasked_preserved"]
    assert out["stitched"].shape[0] == 2 * 4 + 1
    again = lipkit.simulate({"steps": 30, "T": 3, "S": 4, "sample_steps": 3, "hidden": 16, "clips": 3})
    assert out["losses"] == again["losses"]
