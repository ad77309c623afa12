import json

import numpy as np
import pytest

from liftguard.cloud import load_cloud
from liftguard.detect import ClassLabel, load_detections
from liftguard.errors import InvalidSpec
from liftguard.geometry import WorldPoint, world_to_pixel
from liftguard.sync import load_manifest
from liftguard.synth import (
    HumanPath,
    LiftScript,
    SceneObject,
    SceneSpec,
    default_calibration,
    generate_lift,
    generate_scene,
    load_scene_spec,
)


@pytest.fixture(scope="module")
def calib():
    return default_calibration()


def spec_with(objects, seed=0, **kw):
    return SceneSpec(objects=tuple(objects), seed=seed, **kw)


class TestSceneSpec:
    def test_density_must_be_positive(self):
        with pytest.raises(InvalidSpec):
            spec_with([], density=0.0)

    def test_negative_noise_rejected(self):
        with pytest.raises(InvalidSpec):
            spec_with([], noise_sigma=-0.1)

    def test_bad_dims_rejected(self):
        obj = SceneObject(ClassLabel.MIC, (10.0, 0.0, 1.5), (1.0, -2.0, 3.0))
        with pytest.raises(InvalidSpec):
            spec_with([obj])

    def test_default_dims_filled(self):
        obj = SceneObject(ClassLabel.HUMAN, (5.0, 0.0, 0.85))
        assert obj.dims == (0.4, 0.5, 1.7)


class TestGenerateScene:
    def test_seed_determinism(self):
        spec = spec_with([SceneObject(ClassLabel.MIC, (12.0, 0.0, 1.5))], seed=3)
        c1, d1, t1 = generate_scene(spec)
        c2, d2, t2 = generate_scene(spec)
        np.testing.assert_array_equal(c1.points, c2.points)
        assert d1 == d2 and t1 == t2

    def test_different_seeds_differ(self):
        obj = SceneObject(ClassLabel.MIC, (12.0, 0.0, 1.5))
        c1, _, _ = generate_scene(spec_with([obj], seed=1))
        c2, _, _ = generate_scene(spec_with([obj], seed=2))
        assert not np.array_equal(c1.points, c2.points)

    def test_bbox_matches_projected_corners(self, calib):
        obj = SceneObject(ClassLabel.MIC, (15.0, 1.0, 1.5))
        _, dets, _ = generate_scene(spec_with([obj]))
        (det,) = dets
        cx, cy, cz = obj.center
        hx, hy, hz = [d / 2 for d in obj.dims]
        us, vs = [], []
        for sx in (-1, 1):
            for sy in (-1, 1):
                for sz in (-1, 1):
                    p = world_to_pixel(
                        WorldPoint(cx + sx * hx, cy + sy * hy, cz + sz * hz), calib
                    )
                    us.append(p.u)
                    vs.append(p.v)
        assert det.bbox == pytest.approx((min(us), min(vs), max(us), max(vs)))

    def test_on_axis_box_symmetric_about_principal_point(self, calib):
        # Centered on the optical axis: the box should project symmetrically.
        obj = SceneObject(ClassLabel.MIC, (15.0, 0.0, 1.8), (3.0, 6.0, 3.0))
        _, dets, _ = generate_scene(spec_with([obj]))
        x0, y0, x1, y1 = dets[0].bbox
        assert x0 + x1 == pytest.approx(2 * calib.intrinsics.c_x, abs=1e-6)
        assert y0 + y1 == pytest.approx(2 * calib.intrinsics.c_y, abs=1e-6)

    def test_points_lie_on_visible_faces(self):
        # Noise-free sampling of a box 12 m ahead: every point sits on the
        # front, left/right, or top/bottom face plane, never the rear.
        obj = SceneObject(ClassLabel.MIC, (12.0, 0.0, 1.5))
        cloud, _, _ = generate_scene(spec_with([obj], noise_sigma=0.0))
        calib = default_calibration()
        world = calib.world_to_lidar.inverse().apply(cloud.points)
        on_face = np.zeros(len(world), dtype=bool)
        for axis, lo, hi in ((0, 10.5, 13.5), (1, -3.0, 3.0), (2, 0.0, 3.0)):
            for plane in (lo, hi):
                on_face |= np.isclose(world[:, axis], plane, atol=1e-9)
        assert on_face.all()
        assert not np.isclose(world[:, 0], 13.5, atol=1e-9).any()  # rear hidden

    def test_median_depth_near_front_face(self):
        obj = SceneObject(ClassLabel.MIC, (12.0, 0.0, 1.5))
        cloud, _, _ = generate_scene(spec_with([obj], seed=5))
        # LiDAR frame is world-aligned here, so x is range.
        front = np.median(cloud.points[:, 0])
        assert front == pytest.approx(10.5, abs=0.2)

    def test_behind_camera_object_dropped(self):
        obj = SceneObject(ClassLabel.HUMAN, (-5.0, 0.0, 0.85))
        cloud, dets, truths = generate_scene(spec_with([obj]))
        assert dets == [] and truths == []

    def test_truth_is_box_center(self):
        obj = SceneObject(ClassLabel.HUMAN, (10.0, 2.0, 0.85))
        _, _, truths = generate_scene(spec_with([obj]))
        assert truths == [(ClassLabel.HUMAN, WorldPoint(10.0, 2.0, 0.85))]


class TestHumanPath:
    def test_interpolates(self):
        path = HumanPath(((0.0, 0.0, 0.0, 0.0), (2.0, 4.0, 2.0, 0.0)))
        assert path.position(1.0) == pytest.approx((2.0, 1.0, 0.0))

    def test_outside_range_is_none(self):
        path = HumanPath(((1.0, 0.0, 0.0, 0.0), (2.0, 1.0, 0.0, 0.0)))
        assert path.position(0.5) is None
        assert path.position(2.5) is None


class TestLiftScript:
    def test_height_interpolation(self):
        script = LiftScript((12.0, 0.0, 1.5), ((0.0, 0.0), (2.0, 0.3)))
        assert script.height(1.0) == pytest.approx(0.15)
        assert script.duration == 2.0

    def test_unsorted_profile_rejected(self):
        with pytest.raises(InvalidSpec):
            LiftScript((12.0, 0.0, 1.5), ((1.0, 0.0), (0.5, 0.3)))


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    spec = spec_with([], seed=11, density=60.0)
    script = LiftScript(
        (12.0, 0.0, 1.5),
        ((0.0, 0.0), (1.0, 0.3)),
        humans=(HumanPath(((0.0, 10.0, 5.0, 0.85), (1.0, 10.0, 4.0, 0.85))),),
        fps=5.0,
    )
    out = tmp_path_factory.mktemp("lift")
    generate_lift(spec, script, out)
    return out


class TestGenerateLift:
    def test_bundle_layout(self, bundle):
        assert (bundle / "manifest.json").exists()
        assert (bundle / "truth.json").exists()
        entries = load_manifest(bundle / "manifest.json")
        assert len(entries) == 6  # 1 s at 5 fps, inclusive
        for e in entries:
            assert (bundle / e.detections_file).exists()
            assert (bundle / e.cloud_file).exists()

    def test_truth_tracks_script(self, bundle):
        doc = json.loads((bundle / "truth.json").read_text())
        frames = doc["frames"]
        assert frames[0]["mic"] == [12.0, 0.0, 1.5]
        assert frames[-1]["mic"] == [12.0, 0.0, 1.8]
        assert frames[0]["humans"] == [[10.0, 5.0, 0.85]]

    def test_frames_loadable(self, bundle):
        entries = load_manifest(bundle / "manifest.json")
        dets = load_detections(bundle / entries[0].detections_file)
        cloud = load_cloud(bundle / entries[0].cloud_file)
        labels = {d.label for d in dets}
        assert ClassLabel.MIC in labels and ClassLabel.HUMAN in labels
        assert len(cloud) > 100

    def test_reproducible(self, bundle, tmp_path):
        spec = spec_with([], seed=11, density=60.0)
        script = LiftScript(
            (12.0, 0.0, 1.5),
            ((0.0, 0.0), (1.0, 0.3)),
            humans=(HumanPath(((0.0, 10.0, 5.0, 0.85), (1.0, 10.0, 4.0, 0.85))),),
            fps=5.0,
        )
        generate_lift(spec, script, tmp_path)
        a = (bundle / "clouds" / "000003.ply").read_bytes()
        b = (tmp_path / "clouds" / "000003.ply").read_bytes()
        assert a == b


class TestLoadSceneSpec:
    def test_round_trip_document(self, tmp_path):
        doc = """
objects:
  - label: mic
    center: [12.0, 0.0, 1.5]
  - label: human
    center: [10.0, 2.5, 0.85]
    dims: [0.5, 0.5, 1.8]
seed: 4
noise_sigma: 0.01
lift:
  mic_base: [12.0, 0.0, 1.5]
  profile: [[0.0, 0.0], [1.0, 0.3], [4.5, 0.3]]
  fps: 10
  humans:
    - waypoints: [[0.0, 10.0, 5.0, 0.85], [4.5, 10.0, 5.0, 0.85]]
"""
        path = tmp_path / "scene.yaml"
        path.write_text(doc)
        spec, script = load_scene_spec(path)
        assert spec.seed == 4 and spec.noise_sigma == 0.01
        assert spec.objects[0].label is ClassLabel.MIC
        assert spec.objects[1].dims == (0.5, 0.5, 1.8)
        assert script is not None
        assert script.mic_base == (12.0, 0.0, 1.5)
        assert script.height(4.0) == pytest.approx(0.3)
        assert len(script.humans) == 1

    def test_scene_only(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("objects:\n  - label: human\n    center: [8.0, 0.0, 0.85]\n")
        spec, script = load_scene_spec(path)
        assert script is None
        assert len(spec.objects) == 1
