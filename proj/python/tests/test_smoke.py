import json
import math
import pathlib

import numpy as np
import pytest

import gsnav

DATA = pathlib.Path(__file__).resolve().parents[2] / "data" / "scenes"


def test_scene_and_world():
    scene = gsnav.load_scene(str(DATA / "one_room.json"))
    assert scene.name == "one_room"
    assert {o["category"] for o in scene.objects} == {"sofa", "plant", "bookshelf"}
    world = gsnav.World(scene, gsnav.Pose(3.0, 2.5))
    obs = world.observe()
    assert obs["rgb"].shape == (120, 160, 3)
    assert obs["depth"].shape == (120, 160)
    pose, collided = world.act(gsnav.Action.MOVE_FORWARD)
    assert not collided
    assert pose.x == pytest.approx(3.25)


def test_bad_scene_path():
    with pytest.raises(ValueError):
        gsnav.load_scene(str(DATA / "missing.json"))


def test_fmm_open_grid():
    field = gsnav.fmm_distance(np.ones((40, 60), dtype=np.uint8), (10, 20), 0.05)
    rows, cols = np.mgrid[0:40, 0:60]
    euclid = 0.05 * np.hypot(cols - 10, rows - 20)
    far = euclid >= 0.5
    assert np.max(np.abs(field[far] - euclid[far]) / euclid[far]) < 0.02
    blocked = np.ones((10, 10), dtype=np.uint8)
    blocked[:, 5] = 0
    f = gsnav.fmm_distance(blocked, (0, 0))
    assert math.isinf(f[0, 9])


def test_metrics_and_sampling():
    rs = [gsnav.SubtaskResult(True, 4.0, 4.0), gsnav.SubtaskResult(True, 8.0, 4.0),
          gsnav.SubtaskResult(False, 1.0, 2.0)]
    assert gsnav.compute_sr(rs) == pytest.approx(2 / 3)
    assert gsnav.compute_spl(rs) == pytest.approx(0.5)
    p = gsnav.keyframe_probabilities([20.0, 30.0])
    assert p[0] / p[1] == pytest.approx(100.0)


def test_kmeans_objective_non_increasing():
    rng = np.random.default_rng(0)
    pts = np.vstack([rng.normal(c, 0.3, size=(50, 2)) for c in (0.0, 3.0, 6.0)])
    centroids, assignment, objective = gsnav.kmeans(pts, 3, seed=1)
    assert centroids.shape == (3, 2)
    assert len(assignment) == 150
    assert all(b <= a + 1e-9 for a, b in zip(objective, objective[1:]))


def test_config_validation():
    cfg = gsnav.RunConfig()
    with pytest.raises(ValueError):
        cfg.validate()
    cfg.scene_path = str(DATA / "one_room.json")
    cfg.lambda_ = 2.0
    with pytest.raises(ValueError):
        cfg.validate()


def test_small_pipeline(tmp_path):
    cfg = gsnav.RunConfig()
    cfg.scene_path = str(DATA / "one_room.json")
    cfg.n_subtasks = 3
    cfg.explore_budget = 200
    cfg.p2 = 5
    cfg.feature_iters = 100
    cfg.k1 = 8
    cfg.output_dir = str(tmp_path)
    lines = []
    report = json.loads(gsnav.run_pipeline(cfg, lines.append))
    assert report["subtasks"] == 3
    assert 0.0 <= report["spl"] <= report["sr"] <= 1.0
    assert (tmp_path / "metrics.json").exists()
    assert (tmp_path / "codebook.bin").exists()
    assert any(line.startswith("explore") for line in lines)
