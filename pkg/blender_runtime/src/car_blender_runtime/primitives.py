"""Unit-primitive mesh generators and part-assembly geometry.

Pure math, no bpy: every primitive fills the unit cube [-0.5, 0.5]^3 so a
part's size vector scales it directly. Assemblies concatenate part meshes
in the object's local frame and remember per-part face ranges for
slot-level material assignment.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

Vec3 = Tuple[float, float, float]


def unit_box() -> Tuple[List[Vec3], List[tuple]]:
    v = [(-0.5, -0.5, -0.5), (0.5, -0.5, -0.5), (0.5, 0.5, -0.5), (-0.5, 0.5, -0.5),
         (-0.5, -0.5, 0.5), (0.5, -0.5, 0.5), (0.5, 0.5, 0.5), (-0.5, 0.5, 0.5)]
    f = [(0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)]
    return v, f


def unit_cylinder(n: int = 24) -> Tuple[List[Vec3], List[tuple]]:
    verts, faces = [], []
    for z in (-0.5, 0.5):
        for i in range(n):
            a = 2.0 * math.pi * i / n
            verts.append((0.5 * math.cos(a), 0.5 * math.sin(a), z))
    for i in range(n):
        j = (i + 1) % n
        faces.append((i, j, n + j, n + i))
    faces.append(tuple(range(n - 1, -1, -1)))
    faces.append(tuple(range(n, 2 * n)))
    return verts, faces


def unit_sphere(rings: int = 12, segments: int = 24) -> Tuple[List[Vec3], List[tuple]]:
    verts = [(0.0, 0.0, -0.5)]
    for r in range(1, rings):
        phi = math.pi * r / rings - math.pi / 2.0
        z = 0.5 * math.sin(phi)
        rad = 0.5 * math.cos(phi)
        for s in range(segments):
            a = 2.0 * math.pi * s / segments
            verts.append((rad * math.cos(a), rad * math.sin(a), z))
    verts.append((0.0, 0.0, 0.5))
    faces = []
    for s in range(segments):
        faces.append((0, 1 + (s + 1) % segments, 1 + s))
    for r in range(rings - 2):
        base = 1 + r * segments
        for s in range(segments):
            sn = (s + 1) % segments
            faces.append((base + s, base + sn, base + segments + sn, base + segments + s))
    top = len(verts) - 1
    base = top - segments
    for s in range(segments):
        faces.append((top, base + s, base + (s + 1) % segments))
    return verts, faces


def unit_cone(n: int = 24) -> Tuple[List[Vec3], List[tuple]]:
    verts = [
        (0.5 * math.cos(2.0 * math.pi * i / n), 0.5 * math.sin(2.0 * math.pi * i / n), -0.5)
        for i in range(n)
    ]
    verts.append((0.0, 0.0, 0.5))
    faces = [(i, (i + 1) % n, n) for i in range(n)]
    faces.append(tuple(range(n - 1, -1, -1)))
    return verts, faces


def unit_torus(segments: int = 24, minor_segments: int = 12) -> Tuple[List[Vec3], List[tuple]]:
    verts, faces = [], []
    for i in range(segments):
        a = 2.0 * math.pi * i / segments
        for j in range(minor_segments):
            b = 2.0 * math.pi * j / minor_segments
            r = 0.35 + 0.15 * math.cos(b)
            verts.append((r * math.cos(a), r * math.sin(a), 0.5 * math.sin(b)))
    for i in range(segments):
        for j in range(minor_segments):
            a = i * minor_segments + j
            b = i * minor_segments + (j + 1) % minor_segments
            c = ((i + 1) % segments) * minor_segments + (j + 1) % minor_segments
            d = ((i + 1) % segments) * minor_segments + j
            faces.append((a, b, c, d))
    return verts, faces


PRIMITIVES = {
    "box": unit_box,
    "plane": unit_box,  # thin slab keeps face indexing uniform
    "cylinder": unit_cylinder,
    "sphere": unit_sphere,
    "cone": unit_cone,
    "torus": unit_torus,
}


def euler_matrix(rx: float, ry: float, rz: float) -> List[List[float]]:
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    # Rz @ Ry @ Rx, XYZ application order.
    return [
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ]


def _apply(matrix, point):
    return tuple(
        matrix[row][0] * point[0] + matrix[row][1] * point[1] + matrix[row][2] * point[2]
        for row in range(3)
    )


def parts_geometry(
    parts: Sequence[dict],
) -> Tuple[List[Vec3], List[tuple], Dict[str, Tuple[int, int]]]:
    """Concatenate part meshes in the object frame.

    Each part dict carries name, primitive, size, offset, rotation. Returns
    (vertices, faces, {part name: face index range}).
    """
    verts: List[Vec3] = []
    faces: List[tuple] = []
    ranges: Dict[str, Tuple[int, int]] = {}
    for part in parts:
        generator = PRIMITIVES[part["primitive"]]
        base = len(verts)
        unit_verts, unit_faces = generator()
        sx, sy, sz = part["size"]
        rotation = part.get("rotation", (0.0, 0.0, 0.0))
        matrix = euler_matrix(*rotation)
        ox, oy, oz = part["offset"]
        for vx, vy, vz in unit_verts:
            rx, ry, rz = _apply(matrix, (vx * sx, vy * sy, vz * sz))
            verts.append((rx + ox, ry + oy, rz + oz))
        start = len(faces)
        faces.extend(tuple(base + i for i in f) for f in unit_faces)
        ranges[part["name"]] = (start, len(faces))
    return verts, faces, ranges


def bounds(verts: Sequence[Vec3]) -> Tuple[Vec3, Vec3]:
    xs, ys, zs = zip(*verts)
    return (min(xs), min(ys), min(zs)), (max(xs), max(ys), max(zs))
