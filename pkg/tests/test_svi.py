import math
import random

import pytest

from heightcast import svi
from heightcast.errors import InputError, InsideBuildingError
from heightcast.geodata import (BuildingFunction, Footprint, GeoPoint,
                                LocalProjection, build_spatial_index)

import oracles

ORIGIN = GeoPoint(8.68, 49.41)
PROJ = LocalProjection(ORIGIN)


def fp(fid, x0, y0, x1, y1):
    ring = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    return Footprint(fid, ring, [], BuildingFunction.UNKNOWN, {})


def cam(image_id, pos, angle):
    return svi.CameraRecord(image_id, pos, angle)


class TestParseCameraMetadata:
    def test_minimal_record(self):
        rec = {"id": "img1",
               "computed_geometry": {"type": "Point",
                                     "coordinates": [ORIGIN.lon, ORIGIN.lat]},
               "computed_compass_angle": 0.0}
        out = svi.parse_camera_metadata(rec, PROJ)
        assert out.image_id == "img1"
        assert out.position == (0.0, 0.0)
        assert out.compass_angle == 0.0
        assert out.camera_type == "perspective"

    def test_compass_normalized_with_warning(self, caplog):
        rec = {"id": "img2",
               "computed_geometry": {"coordinates": [ORIGIN.lon, ORIGIN.lat]},
               "computed_compass_angle": 450.0}
        with caplog.at_level("WARNING"):
            out = svi.parse_camera_metadata(rec, PROJ)
        assert out.compass_angle == pytest.approx(90.0)
        assert any("normalized" in r.message for r in caplog.records)

    def test_missing_compass_named_in_error(self):
        rec = {"id": "img3",
               "computed_geometry": {"coordinates": [ORIGIN.lon, ORIGIN.lat]}}
        with pytest.raises(InputError, match="computed_compass_angle"):
            svi.parse_camera_metadata(rec, PROJ)

    def test_optional_fields_preserved(self):
        rec = {"id": "img4",
               "computed_geometry": {"coordinates": [ORIGIN.lon, ORIGIN.lat]},
               "computed_compass_angle": 10.0,
               "computed_altitude": 115.2,
               "camera_type": "fisheye",
               "captured_at": 1650000000000,
               "camera_parameters": [0.8, 0.01, -0.02]}
        out = svi.parse_camera_metadata(rec, PROJ)
        assert out.altitude == pytest.approx(115.2)
        assert out.camera_type == "fisheye"
        assert out.captured_at == 1650000000000
        assert out.camera_parameters == (0.8, 0.01, -0.02)


class TestBearing:
    @pytest.mark.parametrize("angle,vec", [
        (0.0, (0.0, 1.0)),
        (90.0, (1.0, 0.0)),
        (180.0, (0.0, -1.0)),
        (225.0, (-math.sqrt(2) / 2, -math.sqrt(2) / 2)),
    ])
    def test_directions(self, angle, vec):
        got = svi.bearing_to_direction(angle)
        assert got == pytest.approx(vec, abs=1e-12)

    def test_unit_norm(self):
        for angle in range(0, 360, 7):
            x, y = svi.bearing_to_direction(float(angle))
            assert math.hypot(x, y) == pytest.approx(1.0)


class TestCastRay:
    def test_straight_ahead_hit(self):
        fps = [fp("a", -0.5, 9.5, 0.5, 10.5)]
        idx = build_spatial_index(fps)
        hit = svi.cast_ray(cam("i", (0, 0), 0.0), fps, idx)
        assert hit.building_id == "a"
        assert hit.hit_point == pytest.approx((0.0, 9.5))
        assert hit.hit_distance == pytest.approx(9.5)

    def test_building_behind_misses(self):
        fps = [fp("a", -0.5, 9.5, 0.5, 10.5)]
        idx = build_spatial_index(fps)
        assert svi.cast_ray(cam("i", (0, 0), 180.0), fps, idx) is None

    def test_nearest_of_two_collinear(self):
        fps = [fp("far", -1, 19, 1, 21), fp("near", -1, 9, 1, 11)]
        idx = build_spatial_index(fps)
        hit = svi.cast_ray(cam("i", (0, 0), 0.0), fps, idx)
        assert hit.building_id == "near"
        assert hit.hit_distance == pytest.approx(9.0)

    def test_out_of_range(self):
        fps = [fp("a", -1, 150, 1, 152)]
        idx = build_spatial_index(fps)
        assert svi.cast_ray(cam("i", (0, 0), 0.0), fps, idx, max_range=100.0) is None

    def test_camera_inside_raises(self):
        fps = [fp("a", -5, -5, 5, 5)]
        idx = build_spatial_index(fps)
        with pytest.raises(InsideBuildingError):
            svi.cast_ray(cam("i", (0, 0), 0.0), fps, idx)

    def test_tie_breaks_to_lower_id(self):
        # two buildings sharing a wall; ray hits the shared corner point
        fps = [fp("b", 0, 5, 2, 7), fp("a", -2, 5, 0, 7)]
        idx = build_spatial_index(fps)
        hit = svi.cast_ray(cam("i", (0, 0), 0.0), fps, idx)
        assert hit.building_id == "a"
        assert hit.hit_distance == pytest.approx(5.0)

    def test_hit_point_on_boundary(self):
        rng = random.Random(0)
        fps = [fp(f"b{i}", x, y, x + 5, y + 5)
               for i, (x, y) in enumerate((rng.uniform(-40, 40), rng.uniform(5, 45))
                                          for _ in range(12))]
        idx = build_spatial_index(fps)
        by_id = {f.id: f for f in fps}
        for a in range(0, 360, 11):
            hit = svi.cast_ray(cam("i", (0, 0), float(a)), fps, idx)
            if hit is None:
                continue
            target = by_id[hit.building_id]
            from heightcast import geometry
            assert geometry.point_on_ring(hit.hit_point, target.exterior, tol=1e-6)

    def test_matches_brute_force_oracle_on_random_scenes(self):
        rng = random.Random(101)
        for _ in range(300):
            fps = []
            for i in range(rng.randint(1, 15)):
                x, y = rng.uniform(-50, 50), rng.uniform(-50, 50)
                w, h = rng.uniform(2, 12), rng.uniform(2, 12)
                fps.append(fp(f"b{i:02d}", x, y, x + w, y + h))
            idx = build_spatial_index(fps)
            pos = (rng.uniform(-60, 60), rng.uniform(-60, 60))
            angle = rng.uniform(0, 360)
            camera = cam("img", pos, angle)
            inside = any(oracles.point_in_polygon_crossings(pos, f.exterior)
                         for f in fps)
            if inside:
                continue
            got = svi.cast_ray(camera, fps, idx, max_range=100.0)
            want = oracles.ray_hits_all_segments(
                pos, svi.bearing_to_direction(angle),
                {f.id: [f.exterior] for f in fps})
            if want is None or want[1] > 100.0:
                assert got is None
            else:
                assert got is not None
                assert got.building_id == want[0]
                assert got.hit_distance == pytest.approx(want[1], abs=1e-9)

    def test_rotation_consistency(self):
        rng = random.Random(7)
        fps = [fp(f"b{i}", rng.uniform(-40, 40), rng.uniform(-40, 40),
                  rng.uniform(-40, 40) + 5, rng.uniform(-40, 40) + 5)
               for i in range(5)]
        fps = [f for f in fps if f.area > 0]
        base_cam = cam("i", (-55.0, -55.0), 30.0)
        idx = build_spatial_index(fps)
        try:
            base_hit = svi.cast_ray(base_cam, fps, idx)
        except InsideBuildingError:
            base_hit = "inside"

        def rot(p, quarter):
            x, y = p
            for _ in range(quarter):
                x, y = -y, x
            return (x, y)

        for quarter in (1, 2, 3):
            rot_fps = []
            for f in fps:
                ring = [rot(p, quarter) for p in f.exterior]
                if oracles.polygon_area_shoelace(ring) > 0:
                    rot_fps.append(Footprint(f.id, ring, [], f.function, f.tags))
            # compass rotates opposite to the scene (counterclockwise scene
            # rotation reduces the clockwise-from-north bearing)
            angle = (30.0 - 90.0 * quarter) % 360.0
            rcam = cam("i", rot(base_cam.position, quarter), angle)
            ridx = build_spatial_index(rot_fps)
            try:
                rhit = svi.cast_ray(rcam, rot_fps, ridx)
            except InsideBuildingError:
                rhit = "inside"
            if base_hit == "inside":
                assert rhit == "inside"
            elif base_hit is None:
                assert rhit is None
            else:
                assert rhit.building_id == base_hit.building_id
                assert rhit.hit_distance == pytest.approx(base_hit.hit_distance)


class TestAlignCameras:
    def test_accounting(self):
        fps = [fp("a", -1, 5, 1, 7), fp("b", 20, 20, 24, 24)]
        idx = build_spatial_index(fps)
        cams = [cam("hit", (0, 0), 0.0),
                cam("miss", (0, 0), 180.0),
                cam("inside", (22, 22), 0.0)]
        assignments, report = svi.align_cameras(cams, fps, idx)
        assert report["parsed"] == 3
        assert report["assigned"] == 1
        assert report["no_hit"] == 1
        assert report["inside"] == 1
        assert report["parsed"] == (report["assigned"] + report["no_hit"]
                                    + report["inside"])
        assert assignments[0].image_id == "hit"

    def test_allowlist_filters(self, tmp_path):
        path = tmp_path / "cams.jsonl"
        import json
        recs = [{"id": i,
                 "computed_geometry": {"coordinates": [ORIGIN.lon, ORIGIN.lat]},
                 "computed_compass_angle": 1.0} for i in ("keep", "drop")]
        path.write_text("\n".join(json.dumps(r) for r in recs))
        records, skipped = svi.read_camera_records(path, PROJ, allowlist={"keep"})
        assert [r.image_id for r in records] == ["keep"]
        assert skipped == []
