import math

import pytest

from car_blender_runtime.primitives import (
    PRIMITIVES,
    bounds,
    euler_matrix,
    parts_geometry,
)


class TestUnitPrimitives:
    @pytest.mark.parametrize("name", sorted(PRIMITIVES))
    def test_fits_unit_cube(self, name):
        verts, faces = PRIMITIVES[name]()
        lo, hi = bounds(verts)
        for axis in range(3):
            assert lo[axis] >= -0.5 - 1e-9
            assert hi[axis] <= 0.5 + 1e-9
        assert faces

    @pytest.mark.parametrize("name", ["box", "cylinder", "sphere", "cone", "torus"])
    def test_spans_full_height(self, name):
        verts, _ = PRIMITIVES[name]()
        lo, hi = bounds(verts)
        assert lo[2] == pytest.approx(-0.5, abs=1e-9)
        assert hi[2] == pytest.approx(0.5, abs=1e-9)

    def test_box_faces_index_valid(self):
        verts, faces = PRIMITIVES["box"]()
        for face in faces:
            assert all(0 <= i < len(verts) for i in face)


class TestPartsGeometry:
    def test_offset_and_scale(self):
        parts = [
            {"name": "body", "primitive": "box", "size": (2.0, 1.0, 0.5),
             "offset": (0.0, 0.0, 0.25), "rotation": (0.0, 0.0, 0.0)}
        ]
        verts, faces, ranges = parts_geometry(parts)
        lo, hi = bounds(verts)
        assert lo == pytest.approx((-1.0, -0.5, 0.0))
        assert hi == pytest.approx((1.0, 0.5, 0.5))
        assert ranges["body"] == (0, len(faces))

    def test_face_ranges_per_part(self):
        parts = [
            {"name": "a", "primitive": "box", "size": (1, 1, 1), "offset": (0, 0, 0.5)},
            {"name": "b", "primitive": "box", "size": (1, 1, 1), "offset": (2, 0, 0.5)},
        ]
        _, faces, ranges = parts_geometry(parts)
        assert ranges["a"] == (0, 6)
        assert ranges["b"] == (6, 12)

    def test_rotation_about_z(self):
        parts = [
            {"name": "bar", "primitive": "box", "size": (2.0, 0.5, 0.5),
             "offset": (0.0, 0.0, 0.0), "rotation": (0.0, 0.0, math.pi / 2)}
        ]
        verts, _, _ = parts_geometry(parts)
        lo, hi = bounds(verts)
        assert hi[0] - lo[0] == pytest.approx(0.5)
        assert hi[1] - lo[1] == pytest.approx(2.0)

    def test_euler_matrix_identity(self):
        m = euler_matrix(0.0, 0.0, 0.0)
        assert m[0] == pytest.approx([1, 0, 0])
        assert m[1] == pytest.approx([0, 1, 0])
        assert m[2] == pytest.approx([0, 0, 1])
