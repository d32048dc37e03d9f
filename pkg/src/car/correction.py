"""Deterministic post-hoc placement correction for a finished scene.

Violating movable objects are boundary-clamped, then projected to the
nearest feasible grid position (smallest displacement, ties to smaller x
then smaller y) under room containment and zero overlap with non-related
neighbors. Supported children are re-seated on their parent's top surface.
The pass is idempotent and order-deterministic: larger footprints settle
first, ids break ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace as _replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import geometry
from .jsonio import write_json
from .model import StructuralError
from .program import (
    CAMERA_MARGIN,
    FALLBACK_TEXTURE_REF,
    MaterialAssign,
    MaterialSpec,
    Pose,
    SceneProgram,
    TextureBind,
)

CONTAINMENT_TOL = 1e-9
SEAT_TOL = 1e-3  # supported children within 1 mm of the surface count as seated


@dataclass(frozen=True)
class CorrectionConfig:
    grid_step: float = 0.05
    max_radius: float = 1.5
    collision_scope: float = 3.0
    # Flat floor coverings (rugs, mats) legitimately sit under furniture;
    # anything this thin is exempt from footprint collision.
    underlay_height: float = 0.06

    def __post_init__(self):
        if self.grid_step <= 0:
            raise ValueError("grid_step must be positive")
        if self.max_radius < self.grid_step:
            raise ValueError("max_radius must be at least one grid step")


@dataclass
class CorrectionEntry:
    object_id: str
    original: Tuple[float, float, float]
    corrected: Tuple[float, float, float]
    displacement: float
    violations: List[str]

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "original": list(self.original),
            "corrected": list(self.corrected),
            "displacement": self.displacement,
            "violations": self.violations,
        }


@dataclass
class CorrectionReport:
    entries: List[CorrectionEntry] = field(default_factory=list)
    unresolved: List[str] = field(default_factory=list)

    @property
    def changed(self) -> bool:
        return bool(self.entries)

    def to_dict(self) -> dict:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "unresolved": self.unresolved,
        }

    def save(self, path) -> None:
        write_json(path, self.to_dict())


def object_height(statement) -> float:
    if statement.kind == "proxy":
        return statement.size[2]
    if statement.kind == "asset_instance":
        return statement.placeholder_size[2]
    tops = [p.offset[2] + p.size[2] / 2.0 for p in statement.parts]
    bottoms = [p.offset[2] - p.size[2] / 2.0 for p in statement.parts]
    return max(tops) - min(bottoms)


def object_top(statement) -> float:
    if statement.kind == "proxy":
        return statement.pose.position[2] + statement.size[2]
    if statement.kind == "asset_instance":
        return statement.pose.position[2] + statement.placeholder_size[2]
    return statement.pose.position[2] + max(
        p.offset[2] + p.size[2] / 2.0 for p in statement.parts
    )


def is_underlay(statement, threshold: float) -> bool:
    return object_height(statement) <= threshold


def is_movable(statement) -> bool:
    return getattr(statement, "placement_type", None) in ("floor", "surface")


def _related(a: str, b: str, parents: Dict[str, Optional[str]]) -> bool:
    """True when one object is an ancestor of the other in the support tree."""
    for start, goal in ((a, b), (b, a)):
        cur = parents.get(start)
        seen = 0
        while cur is not None and seen < 64:
            if cur == goal:
                return True
            cur = parents.get(cur)
            seen += 1
    return False


def seat_height(parent_statement, child_center: Tuple[float, float]) -> float:
    """Resting elevation for a child on its parent.

    Prefers the highest discovered surface whose rectangle contains the
    child's footprint center, then the highest surface, then the parent's
    top face.
    """
    if parent_statement.kind == "assembly":
        surfaces = geometry.discover_surfaces(parent_statement)
        containing = [s for s in surfaces if s.rect.contains_point(child_center, tol=1e-9)]
        if containing:
            return containing[0].height
        if surfaces:
            return surfaces[0].height
    return object_top(parent_statement)


class _Scene:
    """Mutable working state over the program's object statements."""

    def __init__(self, program: SceneProgram, cfg: CorrectionConfig):
        self.cfg = cfg
        self.shell = program.shell
        self.objects: Dict[str, object] = {s.id: s for s in program.objects()}
        self.parents = {s.id: s.parent for s in self.objects.values()}
        self.settled: set = set()

    def footprint(self, object_id: str) -> geometry.Footprint:
        return geometry.footprint_of(self.objects[object_id])

    def neighbors(self, object_id: str, at: Tuple[float, float]) -> List[str]:
        """Settled collision partners for an object evaluated at ``at``.

        Only objects already processed this pass count: earlier (larger)
        objects are anchors that later ones move around. Floor objects
        collide with non-related floor objects; supported children with
        their siblings on the same parent. Underlay items never collide.
        """
        subject = self.objects[object_id]
        if is_underlay(subject, self.cfg.underlay_height):
            return []
        out = []
        subject_surface = subject.placement_type == "surface"
        for other_id in sorted(self.settled):
            if other_id == object_id:
                continue
            other = self.objects[other_id]
            if is_underlay(other, self.cfg.underlay_height):
                continue
            if _related(object_id, other_id, self.parents):
                continue
            if subject_surface:
                if other.placement_type != "surface" or other.parent != subject.parent:
                    continue
            else:
                if other.placement_type != "floor":
                    continue
            fp = self.footprint(other_id)
            if math.hypot(fp.center[0] - at[0], fp.center[1] - at[1]) > self.cfg.collision_scope:
                continue
            out.append(other_id)
        return out

    def feasible(self, object_id: str, center: Tuple[float, float]) -> bool:
        base = self.footprint(object_id)
        candidate = geometry.Footprint(center=center, half_extent=base.half_extent, yaw=base.yaw)
        if not geometry.contained_in_room(candidate, self.shell, tol=CONTAINMENT_TOL):
            return False
        for other_id in self.neighbors(object_id, center):
            if not geometry.footprints_disjoint(candidate, self.footprint(other_id)):
                return False
        return True

    def move(self, object_id: str, position: Tuple[float, float, float]) -> None:
        statement = self.objects[object_id]
        self.objects[object_id] = _replace(
            statement, pose=Pose(position=position, yaw=statement.pose.yaw)
        )


def clamp_to_room(footprint: geometry.Footprint, shell) -> Tuple[float, float]:
    """Smallest translation bringing the footprint's bounding box inside."""
    ex, ey = footprint.aabb_half_extent()
    cx, cy = footprint.center
    if 2.0 * ex >= shell.width:
        cx = shell.width / 2.0
    else:
        cx = min(max(cx, ex), shell.width - ex)
    if 2.0 * ey >= shell.depth:
        cy = shell.depth / 2.0
    else:
        cy = min(max(cy, ey), shell.depth - ey)
    return (cx, cy)


def _grid_offsets(cfg: CorrectionConfig) -> List[Tuple[int, int]]:
    """Lattice offsets within the search radius (unordered)."""
    n = int(math.floor(cfg.max_radius / cfg.grid_step + 1e-9))
    limit = cfg.max_radius * cfg.max_radius + 1e-12
    return [
        (i, j)
        for i in range(-n, n + 1)
        for j in range(-n, n + 1)
        if (i * i + j * j) * cfg.grid_step * cfg.grid_step <= limit
    ]


def search_candidates(
    anchor: Tuple[float, float],
    origin: Tuple[float, float],
    offsets: List[Tuple[int, int]],
    step: float,
) -> List[Tuple[float, float]]:
    """Grid candidates around ``anchor`` ordered by displacement from
    ``origin`` (squared distance, then smaller x, then smaller y)."""
    rows = []
    for i, j in offsets:
        x = anchor[0] + i * step
        y = anchor[1] + j * step
        dx = x - origin[0]
        dy = y - origin[1]
        rows.append((dx * dx + dy * dy, x, y))
    rows.sort()
    return [(x, y) for _, x, y in rows]


def correct_placements(
    program: SceneProgram, cfg: Optional[CorrectionConfig] = None
) -> Tuple[SceneProgram, CorrectionReport]:
    """Project violating movable objects to their nearest feasible placement.

    Objects are processed by descending footprint area (id tie-break);
    earlier objects act as settled anchors for later ones. A violating
    object is boundary-clamped first; if overlap remains, the grid
    neighborhood of the clamped point is searched in increasing
    displacement from the original position (ties to smaller x, then
    smaller y). Supported children are re-seated to their parent's surface
    height. Objects with no feasible candidate stay clamped and are
    reported unresolved. Running the pass twice changes nothing the second
    time.
    """
    cfg = cfg or CorrectionConfig()
    if program.shell.width <= 0 or program.shell.depth <= 0 or not program.shell.walls:
        raise StructuralError("program has no usable room shell")
    scene = _Scene(program, cfg)
    report = CorrectionReport()
    order = sorted(
        scene.objects,
        key=lambda oid: (-scene.footprint(oid).area(), oid),
    )
    offsets = _grid_offsets(cfg)

    for object_id in order:
        statement = scene.objects[object_id]
        if not is_movable(statement):
            scene.settled.add(object_id)
            continue
        original = statement.pose.position
        fp = scene.footprint(object_id)
        violations: List[str] = []

        target_z = original[2]
        if statement.placement_type == "surface" and statement.parent in scene.objects:
            expected = seat_height(scene.objects[statement.parent], fp.center)
            if abs(original[2] - expected) > SEAT_TOL:
                violations.append("stacking")
                target_z = expected

        contained = geometry.contained_in_room(fp, program.shell, tol=CONTAINMENT_TOL)
        if not contained:
            violations.append("boundary")
        overlapping = [
            nid
            for nid in scene.neighbors(object_id, fp.center)
            if not geometry.footprints_disjoint(fp, scene.footprint(nid))
        ]
        if overlapping:
            violations.append("overlap")

        if not violations:
            scene.settled.add(object_id)
            continue

        corrected_xy = (original[0], original[1])
        resolved = True
        if not contained or overlapping:
            clamped = clamp_to_room(fp, program.shell)
            if scene.feasible(object_id, clamped):
                corrected_xy = clamped
            else:
                # Lattice around the clamped point, walked in increasing
                # displacement from the generated position.
                found = None
                for candidate in search_candidates(
                    clamped, (original[0], original[1]), offsets, cfg.grid_step
                ):
                    if scene.feasible(object_id, candidate):
                        found = candidate
                        break
                if found is not None:
                    corrected_xy = found
                else:
                    corrected_xy = clamped
                    resolved = False

        corrected = (corrected_xy[0], corrected_xy[1], target_z)
        scene.move(object_id, corrected)
        scene.settled.add(object_id)
        if corrected != original:
            # Entries record actual corrections; an unresolved object that
            # stays put is reported only through the unresolved list.
            displacement = math.sqrt(
                (corrected[0] - original[0]) ** 2
                + (corrected[1] - original[1]) ** 2
                + (corrected[2] - original[2]) ** 2
            )
            report.entries.append(
                CorrectionEntry(
                    object_id=object_id,
                    original=original,
                    corrected=corrected,
                    displacement=displacement,
                    violations=violations,
                )
            )
        if not resolved:
            report.unresolved.append(object_id)

    statements = [
        scene.objects[s.id] if s.kind in ("proxy", "assembly", "asset_instance") else s
        for s in program.statements
    ]
    corrected_program = SceneProgram(
        shell=program.shell, statements=statements, version=program.version
    )
    return corrected_program, report


# ---------------------------------------------------------------------------
# Static fixups
# ---------------------------------------------------------------------------

DEFAULT_MATERIAL = MaterialSpec(
    material_type="generic", base_color=(0.8, 0.8, 0.8), roughness=0.6
)


@dataclass(frozen=True)
class FixupConfig:
    light_min: float = 0.5
    light_max: float = 1000.0
    texture_root: Optional[str] = None


@dataclass(frozen=True)
class Fix:
    kind: str  # default_material | texture_fallback | light_clamped | camera_coverage
    target: str
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target, "detail": self.detail}


def static_fixups(
    program: SceneProgram, cfg: Optional[FixupConfig] = None
) -> Tuple[SceneProgram, List[Fix]]:
    """Repair common executable-scene defects without touching geometry.

    Missing materials get a neutral default, dangling texture paths fall
    back to the built-in checker, light intensities are clamped into the
    configured range, and an under-covering orthographic camera is widened
    to span the room with margin.
    """
    cfg = cfg or FixupConfig()
    fixes: List[Fix] = []
    statements = list(program.statements)

    covered = set()
    for s in statements:
        if s.kind == "material":
            covered.add(s.target.split("/", 1)[0])
    for obj in program.objects():
        if obj.id not in covered:
            statements.append(MaterialAssign(target=obj.id, spec=DEFAULT_MATERIAL))
            fixes.append(Fix("default_material", obj.id, "no material assigned"))

    for i, s in enumerate(statements):
        if s.kind == "texture" and not s.image_ref.startswith("builtin:"):
            path = Path(s.image_ref)
            if cfg.texture_root and not path.is_absolute():
                path = Path(cfg.texture_root) / path
            if not path.exists():
                statements[i] = TextureBind(
                    target=s.target, image_ref=FALLBACK_TEXTURE_REF, uv=s.uv_dict()
                )
                fixes.append(Fix("texture_fallback", s.target, f"missing {s.image_ref}"))
        elif s.kind == "light":
            clamped = min(cfg.light_max, max(cfg.light_min, s.intensity))
            if clamped != s.intensity:
                statements[i] = _replace(s, intensity=clamped)
                fixes.append(
                    Fix("light_clamped", s.light_kind, f"{s.intensity} -> {clamped}")
                )
        elif s.kind == "camera" and s.camera_kind == "topdown_ortho":
            required = CAMERA_MARGIN * max(program.shell.width, program.shell.depth)
            if s.scale_or_fov < required:
                statements[i] = _replace(s, scale_or_fov=required)
                fixes.append(
                    Fix("camera_coverage", "camera", f"{s.scale_or_fov} -> {required}")
                )

    fixed = SceneProgram(shell=program.shell, statements=statements, version=program.version)
    return fixed, fixes
