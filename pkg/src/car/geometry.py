"""Planar geometric kernel for room layouts.

Oriented floor footprints, exact rectangle-rectangle overlap via convex
clipping, room containment, support-surface discovery on part assemblies,
and occupancy grids for seating small objects on those surfaces.

Conventions (used pipeline-wide): lengths in meters, Z up, yaw in radians
counter-clockwise about Z from +X, room origin at the floor's min corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

# Half extents below 1 mm degenerate to points: zero area, point containment.
POINT_EPS = 1e-3
# Numerical zero for overlap areas (m^2) and separation gaps (m).
CONTACT_EPS = 1e-12

DEFAULT_CELL = 0.02          # occupancy grid cell, 2 cm
DEFAULT_MIN_AREA = 0.0025    # smallest usable support face, 25 cm^2
OCCLUSION_COVER = 0.9        # face excluded if covered >= 90% from above


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    wrapped = math.fmod(yaw + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def rot2d(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Footprint:
    """Oriented rectangle in the floor plane."""

    center: Tuple[float, float]
    half_extent: Tuple[float, float]
    yaw: float = 0.0

    @property
    def is_point(self) -> bool:
        return min(self.half_extent) < POINT_EPS

    def area(self) -> float:
        if self.is_point:
            return 0.0
        return 4.0 * self.half_extent[0] * self.half_extent[1]

    def corners(self) -> np.ndarray:
        """4x2 corner array, counter-clockwise."""
        hx, hy = self.half_extent
        local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
        return local @ rot2d(self.yaw).T + np.asarray(self.center)

    def aabb_half_extent(self) -> Tuple[float, float]:
        """Half extents of the axis-aligned box covering the rectangle."""
        hx, hy = self.half_extent
        c, s = abs(math.cos(self.yaw)), abs(math.sin(self.yaw))
        return hx * c + hy * s, hx * s + hy * c

    def contains_point(self, point: Sequence[float], tol: float = 0.0) -> bool:
        d = np.asarray(point) - np.asarray(self.center)
        local = rot2d(-self.yaw) @ d
        return (
            abs(local[0]) <= self.half_extent[0] + tol
            and abs(local[1]) <= self.half_extent[1] + tol
        )


def footprint_of(statement) -> Footprint:
    """Floor footprint of an object statement.

    Proxies use their size directly; assemblies get the minimal rectangle at
    the object's yaw covering the projections of every part. Works on any
    value exposing ``pose``/``size`` (proxy-like) or ``pose``/``parts``.
    """
    pose = statement.pose
    parts = getattr(statement, "parts", None)
    if parts is None:
        size = getattr(statement, "size", None)
        if size is None:  # asset instances carry placeholder_size
            size = statement.placeholder_size
        return Footprint(
            center=(pose.position[0], pose.position[1]),
            half_extent=(size[0] / 2.0, size[1] / 2.0),
            yaw=pose.yaw,
        )
    points = []
    for part in parts:
        points.append(_part_local_corners(part))
    pts = np.vstack(points)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    local_center = (lo + hi) / 2.0
    world_center = rot2d(pose.yaw) @ local_center + np.array(
        [pose.position[0], pose.position[1]]
    )
    half = (hi - lo) / 2.0
    return Footprint(
        center=(float(world_center[0]), float(world_center[1])),
        half_extent=(float(half[0]), float(half[1])),
        yaw=pose.yaw,
    )


def _part_local_corners(part) -> np.ndarray:
    """XY projections of a part's bounding-box corners in the proxy frame."""
    sx, sy, sz = part.size
    corners = np.array(
        [
            [x, y, z]
            for x in (-sx / 2.0, sx / 2.0)
            for y in (-sy / 2.0, sy / 2.0)
            for z in (-sz / 2.0, sz / 2.0)
        ]
    )
    rx, ry, rz = part.rotation
    rot = _euler_matrix(rx, ry, rz)
    world = corners @ rot.T + np.asarray(part.offset)
    return world[:, :2]


def _euler_matrix(rx: float, ry: float, rz: float) -> np.ndarray:
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    mx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    my = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    mz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return mz @ my @ mx


def _clip_polygon_halfplane(points, origin, normal):
    """Keep the part of a convex polygon with dot(p - origin, normal) >= 0."""
    if not points:
        return []
    out = []
    n = len(points)
    prev = points[-1]
    prev_d = (prev[0] - origin[0]) * normal[0] + (prev[1] - origin[1]) * normal[1]
    for cur in points:
        cur_d = (cur[0] - origin[0]) * normal[0] + (cur[1] - origin[1]) * normal[1]
        if cur_d >= 0.0:
            if prev_d < 0.0:
                t = prev_d / (prev_d - cur_d)
                out.append(
                    (
                        prev[0] + t * (cur[0] - prev[0]),
                        prev[1] + t * (cur[1] - prev[1]),
                    )
                )
            out.append(tuple(cur))
        elif prev_d >= 0.0:
            t = prev_d / (prev_d - cur_d)
            out.append(
                (
                    prev[0] + t * (cur[0] - prev[0]),
                    prev[1] + t * (cur[1] - prev[1]),
                )
            )
        prev, prev_d = cur, cur_d
    return out


def _shoelace(points) -> float:
    area = 0.0
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return abs(area) / 2.0


def overlap_area(a: Footprint, b: Footprint) -> float:
    """Exact intersection area of two oriented rectangles.

    Symmetric; zero iff disjoint, with edge contact counting as zero.
    """
    if a.is_point or b.is_point:
        return 0.0
    # AABB reject avoids clipping for the common far-apart case.
    ah = a.aabb_half_extent()
    bh = b.aabb_half_extent()
    if (
        abs(a.center[0] - b.center[0]) > ah[0] + bh[0]
        or abs(a.center[1] - b.center[1]) > ah[1] + bh[1]
    ):
        return 0.0
    poly = [tuple(p) for p in a.corners()]
    b_corners = b.corners()
    for i in range(4):
        p = b_corners[i]
        q = b_corners[(i + 1) % 4]
        edge = (q[0] - p[0], q[1] - p[1])
        inward = (-edge[1], edge[0])  # corners are CCW, interior is left
        poly = _clip_polygon_halfplane(poly, p, inward)
        if len(poly) < 3:
            return 0.0
    return float(_shoelace(poly))


def footprints_disjoint(a: Footprint, b: Footprint, gap_tol: float = CONTACT_EPS) -> bool:
    """Separating-axis disjointness test, tolerant of exact edge contact."""
    if a.is_point or b.is_point:
        return True
    delta = np.asarray(b.center) - np.asarray(a.center)
    for rect, other in ((a, b), (b, a)):
        rot = rot2d(rect.yaw)
        for axis_idx in range(2):
            axis = rot[:, axis_idx]
            dist = abs(float(delta @ axis))
            reach_self = rect.half_extent[axis_idx]
            oh = other.half_extent
            orot = rot2d(other.yaw)
            reach_other = abs(float(orot[:, 0] @ axis)) * oh[0] + abs(
                float(orot[:, 1] @ axis)
            ) * oh[1]
            if dist >= reach_self + reach_other - gap_tol:
                return True
    return False


def rect_distance(a: Footprint, b: Footprint) -> float:
    """Minimum distance between two rectangles (0 when intersecting)."""
    if not footprints_disjoint(a, b, gap_tol=0.0):
        return 0.0
    best = math.inf
    ca, cb = a.corners(), b.corners()
    for pts, rect in ((ca, b), (cb, a)):
        corners = rect.corners()
        for p in pts:
            for i in range(4):
                best = min(best, _point_segment_distance(p, corners[i], corners[(i + 1) % 4]))
    return best


def _point_segment_distance(p, a, b) -> float:
    ab = np.asarray(b) - np.asarray(a)
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(np.asarray(p) - np.asarray(a)))
    t = float((np.asarray(p) - np.asarray(a)) @ ab) / denom
    t = min(1.0, max(0.0, t))
    closest = np.asarray(a) + t * ab
    return float(np.linalg.norm(np.asarray(p) - closest))


def project_point_to_segment(
    point: Sequence[float], a: Sequence[float], b: Sequence[float]
) -> Tuple[Tuple[float, float], float]:
    """Closest point on segment ab, returned with its parameter t in [0, 1]."""
    ab = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    denom = float(ab @ ab)
    if denom == 0.0:
        return (float(a[0]), float(a[1])), 0.0
    t = float((np.asarray(point, dtype=float) - np.asarray(a)) @ ab) / denom
    t = min(1.0, max(0.0, t))
    closest = np.asarray(a, dtype=float) + t * ab
    return (float(closest[0]), float(closest[1])), t


def contained_in_room(f: Footprint, shell, tol: float = 0.0) -> bool:
    """True iff the footprint lies in the floor rectangle (closed boundary)."""
    w, d = shell.width, shell.depth
    if f.is_point:
        x, y = f.center
        return -tol <= x <= w + tol and -tol <= y <= d + tol
    for x, y in f.corners():
        if not (-tol <= x <= w + tol and -tol <= y <= d + tol):
            return False
    return True


# ---------------------------------------------------------------------------
# Support surfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupportSurface:
    """Upward horizontal face of an object, with a free-space grid."""

    owner: str
    part: str
    height: float
    rect: Footprint
    cell: float
    free_cells: np.ndarray  # bool, shape (ny, nx), True = free

    def grid_shape(self) -> Tuple[int, int]:
        return self.free_cells.shape


@dataclass(frozen=True)
class SlotPlacement:
    position: Tuple[float, float, float]
    yaw: float


def _upright(rotation: Sequence[float]) -> bool:
    rx, ry, _ = rotation
    return abs(math.sin(rx)) < 1e-6 and abs(math.sin(ry)) < 1e-6


def _part_top_height(part) -> float:
    return part.offset[2] + part.size[2] / 2.0


def _part_face(part) -> Optional[Tuple[Tuple[float, float], Tuple[float, float], float]]:
    """Local (center_xy, half_extent, yaw) of a part's top face, if flat-up."""
    if not _upright(part.rotation):
        return None
    sx, sy, _ = part.size
    if part.primitive in ("box", "plane"):
        half = (sx / 2.0, sy / 2.0)
    elif part.primitive == "cylinder":
        # Largest axis-aligned rectangle inscribed in the elliptical top.
        half = (sx / (2.0 * math.sqrt(2.0)), sy / (2.0 * math.sqrt(2.0)))
    else:
        return None
    return (part.offset[0], part.offset[1]), half, part.rotation[2]


def _part_cover_rect(part) -> Footprint:
    """Local-frame XY bounding rectangle of a part, for occlusion tests."""
    pts = _part_local_corners(part)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    return Footprint(
        center=(float((lo[0] + hi[0]) / 2.0), float((lo[1] + hi[1]) / 2.0)),
        half_extent=(float((hi[0] - lo[0]) / 2.0), float((hi[1] - lo[1]) / 2.0)),
        yaw=0.0,
    )


def discover_surfaces(
    assembly,
    cell: float = DEFAULT_CELL,
    min_area: float = DEFAULT_MIN_AREA,
) -> List[SupportSurface]:
    """Find usable horizontal support faces on a part assembly.

    One surface per upward-facing flat top (boxes, cylinders, planes), in
    world coordinates, skipping faces smaller than ``min_area`` and faces
    covered >= 90% by another part sitting strictly higher (a table's leg
    tops under its slab). Sorted by height, highest first.
    """
    if cell <= 0:
        raise ValueError("cell size must be positive")
    pose = assembly.pose
    surfaces = []
    for part in assembly.parts:
        face = _part_face(part)
        if face is None:
            continue
        (fx, fy), (hx, hy), local_yaw = face
        area = 4.0 * hx * hy
        if area < min_area:
            continue
        face_height = _part_top_height(part)
        face_rect_local = Footprint(center=(fx, fy), half_extent=(hx, hy), yaw=local_yaw)
        occluded = False
        for other in assembly.parts:
            if other is part:
                continue
            if _part_top_height(other) <= face_height:
                continue
            cover = overlap_area(face_rect_local, _part_cover_rect(other))
            if cover >= OCCLUSION_COVER * area:
                occluded = True
                break
        if occluded:
            continue
        world_center = rot2d(pose.yaw) @ np.array([fx, fy]) + np.array(
            [pose.position[0], pose.position[1]]
        )
        rect = Footprint(
            center=(float(world_center[0]), float(world_center[1])),
            half_extent=(hx, hy),
            yaw=normalize_yaw(pose.yaw + local_yaw),
        )
        nx = max(1, int(math.floor(2.0 * hx / cell)))
        ny = max(1, int(math.floor(2.0 * hy / cell)))
        surfaces.append(
            SupportSurface(
                owner=assembly.id,
                part=part.name,
                height=pose.position[2] + face_height,
                rect=rect,
                cell=cell,
                free_cells=np.ones((ny, nx), dtype=bool),
            )
        )
    surfaces.sort(key=lambda s: (-s.height, s.part))
    return surfaces


def _cell_centers(surface: SupportSurface) -> np.ndarray:
    """(ny, nx, 2) world coordinates of grid cell centers."""
    ny, nx = surface.free_cells.shape
    c = surface.cell
    xs = (np.arange(nx) - (nx - 1) / 2.0) * c
    ys = (np.arange(ny) - (ny - 1) / 2.0) * c
    gx, gy = np.meshgrid(xs, ys)
    local = np.stack([gx, gy], axis=-1)
    rot = rot2d(surface.rect.yaw)
    world = local @ rot.T + np.asarray(surface.rect.center)
    return world


def occupy(surface: SupportSurface, footprint: Footprint) -> SupportSurface:
    """Mark the grid cells touched by a footprint as occupied.

    Conservative: a cell is taken when its center lies inside the footprint
    inflated by the cell's reach, so partially covered cells are never
    handed out again.
    """
    centers = _cell_centers(surface)
    rel = centers - np.asarray(footprint.center)
    rot = rot2d(-footprint.yaw)
    local = rel @ rot.T
    delta = footprint.yaw - surface.rect.yaw
    inflate = (surface.cell / 2.0) * (abs(math.cos(delta)) + abs(math.sin(delta)))
    hx, hy = footprint.half_extent
    covered = (np.abs(local[..., 0]) <= hx + inflate) & (
        np.abs(local[..., 1]) <= hy + inflate
    )
    return replace(surface, free_cells=surface.free_cells & ~covered)


def find_free_slot(
    surface: SupportSurface, extent: Sequence[float]
) -> Optional[SlotPlacement]:
    """First center-outward block of free cells that fits ``extent``.

    Candidate anchors are ordered by block-center distance from the surface
    center, ties resolved row-major. Returns None when nothing fits.
    """
    ny, nx = surface.free_cells.shape
    kx = max(1, int(math.ceil(extent[0] / surface.cell)))
    ky = max(1, int(math.ceil(extent[1] / surface.cell)))
    if kx > nx or ky > ny:
        return None
    candidates = []
    for j0 in range(ny - ky + 1):
        for i0 in range(nx - kx + 1):
            # Block-center offset from the grid center, in cells.
            dx = i0 + kx / 2.0 - nx / 2.0
            dy = j0 + ky / 2.0 - ny / 2.0
            candidates.append((dx * dx + dy * dy, j0, i0))
    candidates.sort()
    for _, j0, i0 in candidates:
        if surface.free_cells[j0 : j0 + ky, i0 : i0 + kx].all():
            local_x = (i0 + kx / 2.0 - nx / 2.0) * surface.cell
            local_y = (j0 + ky / 2.0 - ny / 2.0) * surface.cell
            world = rot2d(surface.rect.yaw) @ np.array([local_x, local_y]) + np.asarray(
                surface.rect.center
            )
            return SlotPlacement(
                position=(float(world[0]), float(world[1]), surface.height),
                yaw=surface.rect.yaw,
            )
    return None
