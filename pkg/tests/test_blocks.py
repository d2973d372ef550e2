import pytest

from heightcast.geodata import Footprint, StreetSegment, build_network
from heightcast.geodata import BuildingFunction
from heightcast.morphometry import blocks as blk
from heightcast import geometry

import oracles


def grid_network(k, spacing=10.0):
    segs = []
    w = k * spacing
    for i in range(k + 1):
        y = i * spacing
        segs.append(StreetSegment(f"h{i}", [(0, y), (w, y)]))
        segs.append(StreetSegment(f"v{i}", [(i * spacing, 0), (i * spacing, w)]))
    return build_network(segs)


def square_fp(fid, x, y, s=1.0, fn=BuildingFunction.UNKNOWN):
    ring = [(x, y), (x + s, y), (x + s, y + s), (x, y + s), (x, y)]
    return Footprint(fid, ring, [], fn, {})


class TestGridBlocks:
    @pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
    def test_interior_face_count_is_euler_count(self, k):
        net = grid_network(k)
        faces = blk.extract_faces(net)
        # E - V + 1 bounded faces for a connected planar graph
        assert len(faces) == (k ** 2)

    def test_grid_block_areas(self):
        net = grid_network(2, spacing=10.0)
        bs = blk.tessellate_blocks(net)
        assert len(bs) == 4
        for b in bs:
            assert b.area == pytest.approx(100.0)

    def test_two_by_two_from_three_streets_each_way(self):
        # 3 horizontal + 3 vertical streets = 2x2 blocks
        net = grid_network(2)
        assert len(blk.extract_faces(net)) == 4


class TestOtherShapes:
    def test_triangle_single_block(self):
        net = build_network([
            StreetSegment("a", [(0, 0), (10, 0)]),
            StreetSegment("b", [(10, 0), (5, 8)]),
            StreetSegment("c", [(5, 8), (0, 0)]),
        ])
        bs = blk.tessellate_blocks(net)
        assert len(bs) == 1
        assert bs[0].area == pytest.approx(40.0)

    def test_tree_network_no_blocks(self):
        net = build_network([
            StreetSegment("a", [(0, 0), (10, 0)]),
            StreetSegment("b", [(10, 0), (10, 10)]),
            StreetSegment("c", [(10, 0), (20, 0)]),
            StreetSegment("d", [(20, 0), (30, 5)]),
        ])
        assert blk.tessellate_blocks(net) == []

    def test_cycle_with_spur(self):
        net = build_network([
            StreetSegment("sq", [(0, 0), (10, 0), (10, 10), (0, 10), (0, 0)]),
            StreetSegment("spur", [(10, 0), (20, 0)]),
        ])
        bs = blk.tessellate_blocks(net)
        assert len(bs) == 1
        assert bs[0].area == pytest.approx(100.0)

    def test_closed_loop_street(self):
        net = build_network([
            StreetSegment("ring", [(0, 0), (10, 0), (10, 10), (0, 10), (0, 0)]),
        ])
        bs = blk.tessellate_blocks(net)
        assert len(bs) == 1
        assert bs[0].area == pytest.approx(100.0)

    def test_nested_squares(self):
        net = build_network([
            StreetSegment("outer", [(0, 0), (20, 0), (20, 20), (0, 20), (0, 0)]),
            StreetSegment("inner", [(5, 5), (15, 5), (15, 15), (5, 15), (5, 5)]),
        ])
        bs = blk.tessellate_blocks(net)
        # disconnected nesting: both rings produce their bounded face
        assert sorted(round(b.area) for b in bs) == [100, 400]


class TestAssignment:
    def test_centroid_containment(self):
        net = grid_network(2, spacing=10.0)
        bs = blk.tessellate_blocks(net)
        fps = [square_fp("a", 2, 2), square_fp("b", 12, 2), square_fp("c", 2, 12),
               square_fp("d", 15, 15), square_fp("out", 100, 100)]
        assigned = blk.assign_buildings(bs, fps)
        placed = {fid: b.id for b in assigned for fid in b.building_ids}
        assert placed["out"] == blk.UNBOUNDED_BLOCK_ID
        # each in-grid building in a distinct bounded block
        in_blocks = {placed[f] for f in ("a", "b", "c", "d")}
        assert len(in_blocks) == 4
        assert blk.UNBOUNDED_BLOCK_ID not in in_blocks

    def test_matches_ray_crossing_oracle(self):
        net = grid_network(3, spacing=10.0)
        bs = blk.tessellate_blocks(net)
        import random
        rng = random.Random(5)
        fps = [square_fp(f"b{i}", rng.uniform(-5, 32), rng.uniform(-5, 32), 0.5)
               for i in range(60)]
        assigned = blk.assign_buildings(bs, fps)
        placed = {fid: b.id for b in assigned for fid in b.building_ids}
        for fp in fps:
            c = fp.centroid
            containing = [b.id for b in bs if oracles.point_in_polygon_crossings(c, b.ring)]
            if containing:
                assert placed[fp.id] in containing
            else:
                assert placed[fp.id] == blk.UNBOUNDED_BLOCK_ID

    def test_nested_assignment_prefers_smallest(self):
        net = build_network([
            StreetSegment("outer", [(0, 0), (20, 0), (20, 20), (0, 20), (0, 0)]),
            StreetSegment("inner", [(5, 5), (15, 5), (15, 15), (5, 15), (5, 5)]),
        ])
        bs = blk.tessellate_blocks(net)
        fps = [square_fp("center", 9, 9), square_fp("ring_zone", 1, 1)]
        assigned = blk.assign_buildings(bs, fps)
        placed = {fid: b.id for b in assigned for fid in b.building_ids}
        small = min((b for b in bs), key=lambda b: b.area)
        big = max((b for b in bs), key=lambda b: b.area)
        assert placed["center"] == small.id
        assert placed["ring_zone"] == big.id

    def test_face_rings_are_ccw_and_closed(self):
        net = grid_network(3)
        for b in blk.tessellate_blocks(net):
            assert b.ring[0] == b.ring[-1]
            assert geometry.signed_area(b.ring) > 0
