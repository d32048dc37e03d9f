"""Scene program: the structured IR between image parsing and Blender code.

A program is a room shell plus an ordered list of constructor statements
(box proxies, part assemblies, retrieved asset instances, materials,
textures, lights, camera, render settings). Programs are values: every
rewrite pass returns a new program and leaves poses, sizes, and parts of
untouched statements bit-identical, which the geometry hash makes easy to
assert.
"""

from __future__ import annotations

import hashlib
import logging
import math
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from . import geometry
from .jsonio import canonical_dumps, write_json

logger = logging.getLogger(__name__)

IR_VERSION = "1"
FALLBACK_TEXTURE_REF = "builtin:checker"
CAMERA_MARGIN = 1.05  # top-down camera covers the shell with 5% slack

LIGHT_KINDS = ("sun", "point", "area", "spot")
CAMERA_KINDS = ("topdown_ortho", "perspective")
PART_PRIMITIVES = ("box", "cylinder", "sphere", "cone", "plane", "torus")


class ParseError(ValueError):
    """Program text violates the IR schema; message carries the JSON path."""


class LinkError(ValueError):
    """A statement references a target that does not resolve."""


class ConflictError(ValueError):
    """An id collides with one already present in the program."""


Vec3 = Tuple[float, float, float]


def _vec3(value, path: str) -> Vec3:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ParseError(f"{path}: expected a 3-vector")
    try:
        return (float(value[0]), float(value[1]), float(value[2]))
    except (TypeError, ValueError):
        raise ParseError(f"{path}: expected numeric components") from None


@dataclass(frozen=True)
class Pose:
    """Object placement: origin at footprint center on the bottom face."""

    position: Vec3
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "yaw", geometry.normalize_yaw(float(self.yaw)))

    def to_dict(self) -> dict:
        return {"position": list(self.position), "yaw": self.yaw}

    @classmethod
    def from_dict(cls, d: dict, path: str = "pose") -> "Pose":
        if "position" not in d:
            raise ParseError(f"{path}.position: missing")
        return cls(position=_vec3(d["position"], f"{path}.position"), yaw=float(d.get("yaw", 0.0)))


@dataclass(frozen=True)
class Part:
    """Primitive piece of an assembly, defined in the proxy's local frame."""

    name: str
    primitive: str
    size: Vec3
    offset: Vec3  # geometric center of the part relative to the object origin
    rotation: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "size", tuple(float(v) for v in self.size))
        object.__setattr__(self, "offset", tuple(float(v) for v in self.offset))
        object.__setattr__(self, "rotation", tuple(float(v) for v in self.rotation))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "primitive": self.primitive,
            "size": list(self.size),
            "offset": list(self.offset),
            "rotation": list(self.rotation),
        }

    @classmethod
    def from_dict(cls, d: dict, path: str = "part") -> "Part":
        primitive = d.get("primitive")
        if primitive not in PART_PRIMITIVES:
            raise ParseError(f"{path}.primitive: unknown primitive {primitive!r}")
        size = _vec3(d["size"], f"{path}.size")
        if min(size) <= 0:
            raise ParseError(f"{path}.size: must be strictly positive")
        return cls(
            name=d["name"],
            primitive=primitive,
            size=size,
            offset=_vec3(d.get("offset", (0, 0, 0)), f"{path}.offset"),
            rotation=_vec3(d.get("rotation", (0, 0, 0)), f"{path}.rotation"),
        )


@dataclass(frozen=True)
class MaterialSpec:
    material_type: str
    base_color: Vec3 = (0.8, 0.8, 0.8)
    roughness: float = 0.5
    metallic: float = 0.0
    specular: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "base_color", tuple(float(v) for v in self.base_color))

    @property
    def needs_shader_override(self) -> bool:
        return self.material_type in ("glass", "mirror")

    def to_dict(self) -> dict:
        return {
            "material_type": self.material_type,
            "base_color": list(self.base_color),
            "roughness": self.roughness,
            "metallic": self.metallic,
            "specular": self.specular,
        }

    @classmethod
    def from_dict(cls, d: dict, path: str = "spec") -> "MaterialSpec":
        spec = cls(
            material_type=d["material_type"],
            base_color=_vec3(d.get("base_color", (0.8, 0.8, 0.8)), f"{path}.base_color"),
            roughness=float(d.get("roughness", 0.5)),
            metallic=float(d.get("metallic", 0.0)),
            specular=float(d.get("specular", 0.5)),
        )
        for name in ("roughness", "metallic"):
            v = getattr(spec, name)
            if not 0.0 <= v <= 1.0:
                raise ParseError(f"{path}.{name}: {v} outside [0, 1]")
        if any(not 0.0 <= c <= 1.0 for c in spec.base_color):
            raise ParseError(f"{path}.base_color: components outside [0, 1]")
        if spec.specular < 0:
            raise ParseError(f"{path}.specular: must be >= 0")
        return spec


# ---------------------------------------------------------------------------
# Room shell
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WallSegment:
    id: str
    start: Tuple[float, float]
    end: Tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "end", tuple(float(v) for v in self.end))

    def to_dict(self) -> dict:
        return {"id": self.id, "start": list(self.start), "end": list(self.end)}

    @classmethod
    def from_dict(cls, d: dict) -> "WallSegment":
        return cls(id=d["id"], start=tuple(d["start"]), end=tuple(d["end"]))


@dataclass(frozen=True)
class Cutout:
    """Door or window opening on a wall, measured along the wall run."""

    kind: str  # "door" | "window"
    wall: str
    center: float  # meters from the wall's start point
    width: float
    bottom: float
    height: float

    def __post_init__(self):
        for name in ("center", "width", "bottom", "height"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "wall": self.wall,
            "center": self.center,
            "width": self.width,
            "bottom": self.bottom,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Cutout":
        return cls(
            kind=d["kind"],
            wall=d["wall"],
            center=float(d["center"]),
            width=float(d["width"]),
            bottom=float(d.get("bottom", 0.0)),
            height=float(d["height"]),
        )


@dataclass(frozen=True)
class RoomShell:
    width: float
    depth: float
    wall_height: float = 2.6
    wall_thickness: float = 0.1
    walls: Tuple[WallSegment, ...] = ()
    cutouts: Tuple[Cutout, ...] = ()

    def __post_init__(self):
        for name in ("width", "depth", "wall_height", "wall_thickness"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "walls", tuple(self.walls))
        object.__setattr__(self, "cutouts", tuple(self.cutouts))

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "depth": self.depth,
            "wall_height": self.wall_height,
            "wall_thickness": self.wall_thickness,
            "walls": [w.to_dict() for w in self.walls],
            "cutouts": [c.to_dict() for c in self.cutouts],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoomShell":
        shell = cls(
            width=float(d["width"]),
            depth=float(d["depth"]),
            wall_height=float(d.get("wall_height", 2.6)),
            wall_thickness=float(d.get("wall_thickness", 0.1)),
            walls=tuple(WallSegment.from_dict(w) for w in d.get("walls", [])),
            cutouts=tuple(Cutout.from_dict(c) for c in d.get("cutouts", [])),
        )
        if shell.width <= 0 or shell.depth <= 0 or shell.wall_height <= 0:
            raise ParseError("shell: extents must be strictly positive")
        return shell

    def interior_point(self) -> Tuple[float, float]:
        return (self.width / 2.0, self.depth / 2.0)


def default_walls(width: float, depth: float) -> Tuple[WallSegment, ...]:
    return (
        WallSegment("wall_s", (0.0, 0.0), (width, 0.0)),
        WallSegment("wall_e", (width, 0.0), (width, depth)),
        WallSegment("wall_n", (width, depth), (0.0, depth)),
        WallSegment("wall_w", (0.0, depth), (0.0, 0.0)),
    )


def make_shell(
    width: float,
    depth: float,
    wall_height: float = 2.6,
    cutouts: Sequence[Cutout] = (),
) -> RoomShell:
    return RoomShell(
        width=width,
        depth=depth,
        wall_height=wall_height,
        walls=default_walls(width, depth),
        cutouts=tuple(cutouts),
    )


def wall_inward_normal(wall: WallSegment, shell: RoomShell) -> Tuple[float, float]:
    dx = wall.end[0] - wall.start[0]
    dy = wall.end[1] - wall.start[1]
    length = math.hypot(dx, dy)
    if length == 0:
        return (0.0, 1.0)
    normal = (-dy / length, dx / length)
    mid = ((wall.start[0] + wall.end[0]) / 2.0, (wall.start[1] + wall.end[1]) / 2.0)
    ix, iy = shell.interior_point()
    if normal[0] * (ix - mid[0]) + normal[1] * (iy - mid[1]) < 0:
        normal = (-normal[0], -normal[1])
    return normal


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Proxy:
    kind = "proxy"
    id: str
    category: str
    pose: Pose
    size: Vec3
    parent: Optional[str] = None
    placement_type: str = "floor"

    def __post_init__(self):
        object.__setattr__(self, "size", tuple(float(v) for v in self.size))

    def to_dict(self) -> dict:
        return {
            "kind": "proxy",
            "id": self.id,
            "category": self.category,
            "pose": self.pose.to_dict(),
            "size": list(self.size),
            "parent": self.parent,
            "placement_type": self.placement_type,
        }


@dataclass(frozen=True)
class Assembly:
    kind = "assembly"
    id: str
    category: str
    pose: Pose
    parts: Tuple[Part, ...]
    parent: Optional[str] = None
    placement_type: str = "floor"

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def to_dict(self) -> dict:
        return {
            "kind": "assembly",
            "id": self.id,
            "category": self.category,
            "pose": self.pose.to_dict(),
            "parts": [p.to_dict() for p in self.parts],
            "parent": self.parent,
            "placement_type": self.placement_type,
        }


@dataclass(frozen=True)
class AssetInstance:
    """Retrieved library mesh standing in for a placeholder proxy."""

    kind = "asset_instance"
    id: str
    category: str
    pose: Pose
    mesh_ref: str
    scale: Vec3
    placeholder_size: Vec3
    parent: Optional[str] = None
    placement_type: str = "floor"

    def __post_init__(self):
        object.__setattr__(self, "scale", tuple(float(v) for v in self.scale))
        object.__setattr__(
            self, "placeholder_size", tuple(float(v) for v in self.placeholder_size)
        )

    def to_dict(self) -> dict:
        return {
            "kind": "asset_instance",
            "id": self.id,
            "category": self.category,
            "pose": self.pose.to_dict(),
            "mesh_ref": self.mesh_ref,
            "scale": list(self.scale),
            "placeholder_size": list(self.placeholder_size),
            "parent": self.parent,
            "placement_type": self.placement_type,
        }


@dataclass(frozen=True)
class MaterialAssign:
    kind = "material"
    target: str  # object id or "id/part_name"; also "floor" or a wall id
    spec: MaterialSpec

    def to_dict(self) -> dict:
        return {"kind": "material", "target": self.target, "spec": self.spec.to_dict()}


@dataclass(frozen=True)
class TextureBind:
    kind = "texture"
    target: str
    image_ref: str
    uv: Tuple[Tuple[str, object], ...] = ()  # descriptor, e.g. {"mode": "tile"}

    def __post_init__(self):
        if isinstance(self.uv, dict):
            object.__setattr__(self, "uv", tuple(sorted(self.uv.items())))

    def uv_dict(self) -> dict:
        return dict(self.uv)

    def to_dict(self) -> dict:
        return {
            "kind": "texture",
            "target": self.target,
            "image_ref": self.image_ref,
            "uv": self.uv_dict(),
        }


@dataclass(frozen=True)
class Light:
    kind = "light"
    light_kind: str
    pose: Pose
    intensity: float
    color: Vec3 = (1.0, 1.0, 1.0)
    direction: Optional[Vec3] = None  # sun beam direction, unit-ish, world frame

    def __post_init__(self):
        object.__setattr__(self, "intensity", float(self.intensity))
        object.__setattr__(self, "color", tuple(float(v) for v in self.color))
        if self.direction is not None:
            object.__setattr__(self, "direction", tuple(float(v) for v in self.direction))

    def to_dict(self) -> dict:
        return {
            "kind": "light",
            "light_kind": self.light_kind,
            "pose": self.pose.to_dict(),
            "intensity": self.intensity,
            "color": list(self.color),
            "direction": list(self.direction) if self.direction else None,
        }


@dataclass(frozen=True)
class Camera:
    kind = "camera"
    camera_kind: str
    pose: Pose
    scale_or_fov: float

    def __post_init__(self):
        object.__setattr__(self, "scale_or_fov", float(self.scale_or_fov))

    def to_dict(self) -> dict:
        return {
            "kind": "camera",
            "camera_kind": self.camera_kind,
            "pose": self.pose.to_dict(),
            "scale_or_fov": self.scale_or_fov,
        }


@dataclass(frozen=True)
class RenderSettings:
    kind = "render_settings"
    resolution: Tuple[int, int] = (1024, 1024)
    sample_count: int = 32
    ambient_strength: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "resolution", tuple(int(v) for v in self.resolution))
        object.__setattr__(self, "sample_count", int(self.sample_count))
        object.__setattr__(self, "ambient_strength", float(self.ambient_strength))

    def to_dict(self) -> dict:
        return {
            "kind": "render_settings",
            "resolution": list(self.resolution),
            "sample_count": self.sample_count,
            "ambient_strength": self.ambient_strength,
        }


Statement = Union[
    Proxy, Assembly, AssetInstance, MaterialAssign, TextureBind, Light, Camera, RenderSettings
]

OBJECT_KINDS = ("proxy", "assembly", "asset_instance")
STATEMENT_KINDS = (
    "proxy",
    "assembly",
    "asset_instance",
    "material",
    "texture",
    "light",
    "camera",
    "render_settings",
)


def _statement_from_dict(d: dict, path: str) -> Statement:
    kind = d.get("kind")
    if kind == "proxy":
        size = _vec3(d["size"], f"{path}.size")
        if min(size) <= 0:
            raise ParseError(f"{path}.size: must be strictly positive")
        return Proxy(
            id=d["id"],
            category=d["category"],
            pose=Pose.from_dict(d["pose"], f"{path}.pose"),
            size=size,
            parent=d.get("parent"),
            placement_type=d.get("placement_type", "floor"),
        )
    if kind == "assembly":
        parts = tuple(
            Part.from_dict(p, f"{path}.parts[{i}]") for i, p in enumerate(d["parts"])
        )
        if not parts:
            raise ParseError(f"{path}.parts: assembly needs at least one part")
        return Assembly(
            id=d["id"],
            category=d["category"],
            pose=Pose.from_dict(d["pose"], f"{path}.pose"),
            parts=parts,
            parent=d.get("parent"),
            placement_type=d.get("placement_type", "floor"),
        )
    if kind == "asset_instance":
        return AssetInstance(
            id=d["id"],
            category=d["category"],
            pose=Pose.from_dict(d["pose"], f"{path}.pose"),
            mesh_ref=d["mesh_ref"],
            scale=_vec3(d["scale"], f"{path}.scale"),
            placeholder_size=_vec3(d["placeholder_size"], f"{path}.placeholder_size"),
            parent=d.get("parent"),
            placement_type=d.get("placement_type", "floor"),
        )
    if kind == "material":
        return MaterialAssign(
            target=d["target"], spec=MaterialSpec.from_dict(d["spec"], f"{path}.spec")
        )
    if kind == "texture":
        return TextureBind(target=d["target"], image_ref=d["image_ref"], uv=d.get("uv", {}))
    if kind == "light":
        if d.get("light_kind") not in LIGHT_KINDS:
            raise ParseError(f"{path}.light_kind: unknown kind {d.get('light_kind')!r}")
        return Light(
            light_kind=d["light_kind"],
            pose=Pose.from_dict(d["pose"], f"{path}.pose"),
            intensity=float(d["intensity"]),
            color=_vec3(d.get("color", (1, 1, 1)), f"{path}.color"),
            direction=_vec3(d["direction"], f"{path}.direction") if d.get("direction") else None,
        )
    if kind == "camera":
        if d.get("camera_kind") not in CAMERA_KINDS:
            raise ParseError(f"{path}.camera_kind: unknown kind {d.get('camera_kind')!r}")
        return Camera(
            camera_kind=d["camera_kind"],
            pose=Pose.from_dict(d["pose"], f"{path}.pose"),
            scale_or_fov=float(d["scale_or_fov"]),
        )
    if kind == "render_settings":
        return RenderSettings(
            resolution=tuple(int(v) for v in d.get("resolution", (1024, 1024))),
            sample_count=int(d.get("sample_count", 32)),
            ambient_strength=float(d.get("ambient_strength", 0.3)),
        )
    raise ParseError(f"{path}.kind: unknown statement kind {kind!r}")


# ---------------------------------------------------------------------------
# Program
# ---------------------------------------------------------------------------


@dataclass
class SceneProgram:
    shell: RoomShell
    statements: List[Statement] = field(default_factory=list)
    version: str = IR_VERSION

    # -- views ---------------------------------------------------------------

    def objects(self) -> List[Statement]:
        return [s for s in self.statements if s.kind in OBJECT_KINDS]

    def object_ids(self) -> List[str]:
        return [s.id for s in self.objects()]

    def find_object(self, object_id: str) -> Optional[Statement]:
        for s in self.statements:
            if s.kind in OBJECT_KINDS and s.id == object_id:
                return s
        return None

    def camera(self) -> Optional[Camera]:
        for s in self.statements:
            if s.kind == "camera":
                return s
        return None

    def resolvable_targets(self) -> set:
        targets = {"floor"}
        targets.update(w.id for w in self.shell.walls)
        for s in self.objects():
            targets.add(s.id)
            if s.kind == "assembly":
                for part in s.parts:
                    targets.add(f"{s.id}/{part.name}")
        return targets

    # -- invariants ----------------------------------------------------------

    def validate(self) -> None:
        if self.shell.width <= 0 or self.shell.depth <= 0:
            raise ParseError("shell: extents must be strictly positive")
        ids = set()
        for s in self.objects():
            if s.id in ids:
                raise ConflictError(f"object id {s.id!r} defined twice")
            ids.add(s.id)
        cameras = [s for s in self.statements if s.kind == "camera"]
        if len(cameras) > 1:
            raise ParseError("program has more than one camera statement")
        targets = self.resolvable_targets()
        for s in self.statements:
            if s.kind in ("material", "texture") and s.target not in targets:
                raise LinkError(f"statement target {s.target!r} does not resolve")
            if s.kind in OBJECT_KINDS and s.parent is not None and s.parent not in ids:
                raise LinkError(f"object {s.id!r} parent {s.parent!r} does not resolve")

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "shell": self.shell.to_dict(),
            "statements": [s.to_dict() for s in self.statements],
        }

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "SceneProgram":
        return parse(Path(path).read_text(encoding="utf-8"))


def serialize(program: SceneProgram) -> str:
    """Deterministic canonical text form of a program."""
    return canonical_dumps(program.to_dict())


def parse(text: str) -> SceneProgram:
    """Parse canonical program text, validating structure and links."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"$: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ParseError("$: program must be a JSON object")
    if "version" not in data:
        raise ParseError("$.version: missing (mandatory)")
    if "shell" not in data:
        raise ParseError("$.shell: missing")
    shell = RoomShell.from_dict(data["shell"])
    statements = [
        _statement_from_dict(s, f"$.statements[{i}]")
        for i, s in enumerate(data.get("statements", []))
    ]
    program = SceneProgram(shell=shell, statements=statements, version=str(data["version"]))
    program.validate()
    return program


def geometry_hash(program: SceneProgram) -> str:
    """Hash over every geometry-bearing field (shell, poses, sizes, parts).

    Materials, textures, lights, camera, and render settings do not enter,
    so geometry-preserving passes must leave this hash unchanged.
    """
    payload = {
        "shell": program.shell.to_dict(),
        "objects": sorted(
            (
                {
                    "id": s.id,
                    "kind": s.kind,
                    "pose": s.pose.to_dict(),
                    "geometry": (
                        list(s.size)
                        if s.kind == "proxy"
                        else [p.to_dict() for p in s.parts]
                        if s.kind == "assembly"
                        else {"scale": list(s.scale), "mesh_ref": s.mesh_ref}
                    ),
                    "parent": s.parent,
                    "placement_type": s.placement_type,
                }
                for s in program.objects()
            ),
            key=lambda d: d["id"],
        ),
    }
    return hashlib.sha256(canonical_dumps(payload).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Rewrite passes
# ---------------------------------------------------------------------------


def _nearest_wall(shell: RoomShell, point: Tuple[float, float]):
    best = None
    best_dist = math.inf
    for wall in shell.walls:
        projected, _ = geometry.project_point_to_segment(point, wall.start, wall.end)
        dist = math.hypot(projected[0] - point[0], projected[1] - point[1])
        if dist < best_dist - 1e-12:
            best, best_dist = (wall, projected), dist
    return best


def snap_to_wall(proxy: Proxy, shell: RoomShell) -> Proxy:
    """Project a wall item onto the nearest wall plane, facing the interior.

    The item's depth axis (local +Y) ends up along the inward normal, and
    its center sits half a depth inside the wall plane. Mounting height is
    preserved.
    """
    if not shell.walls:
        return proxy
    wall, projected = _nearest_wall(shell, (proxy.pose.position[0], proxy.pose.position[1]))
    normal = wall_inward_normal(wall, shell)
    yaw = geometry.normalize_yaw(math.atan2(normal[1], normal[0]) - math.pi / 2.0)
    half_depth = proxy.size[1] / 2.0
    position = (
        projected[0] + normal[0] * half_depth,
        projected[1] + normal[1] * half_depth,
        proxy.pose.position[2],
    )
    return replace(proxy, pose=Pose(position=position, yaw=yaw), placement_type="wall")


def append_objects(
    major: SceneProgram,
    walls: Sequence[Proxy],
    minors: Sequence[Proxy],
) -> SceneProgram:
    """Extend a frozen major layout with wall items and salient minors.

    Existing statements are carried over untouched and in order; wall items
    are snapped onto the nearest wall plane before appending.
    """
    existing = set(major.object_ids())
    appended: List[Statement] = []
    for proxy in walls:
        if proxy.id in existing:
            raise ConflictError(f"wall object id {proxy.id!r} already present")
        existing.add(proxy.id)
        appended.append(snap_to_wall(proxy, major.shell))
    for proxy in minors:
        if proxy.id in existing:
            raise ConflictError(f"minor object id {proxy.id!r} already present")
        existing.add(proxy.id)
        appended.append(proxy)
    return SceneProgram(
        shell=major.shell,
        statements=list(major.statements) + appended,
        version=major.version,
    )


GeometryDict = Dict[str, Tuple[Part, ...]]


def geometry_dict_to_payload(gdict: GeometryDict) -> dict:
    return {oid: [p.to_dict() for p in parts] for oid, parts in sorted(gdict.items())}


def geometry_dict_from_payload(payload: dict) -> GeometryDict:
    return {
        oid: tuple(Part.from_dict(p, f"{oid}[{i}]") for i, p in enumerate(parts))
        for oid, parts in payload.items()
    }


def replace_with_parts(
    layout: SceneProgram, mapping: Dict[str, Sequence[Part]]
) -> Tuple[SceneProgram, GeometryDict]:
    """Swap proxy constructors for part assemblies, preserving world pose.

    Parts live in the proxy's local frame, so each assembly inherits the
    proxy's pose verbatim. The returned geometry dictionary records the part
    list per object for later surface discovery and material assignment.
    """
    proxies = {s.id for s in layout.objects() if s.kind == "proxy"}
    missing = sorted(set(mapping) - proxies)
    if missing:
        raise LinkError(f"part mapping names ids absent from the program: {missing}")
    gdict: GeometryDict = {}
    statements: List[Statement] = []
    for s in layout.statements:
        if s.kind == "proxy" and s.id in mapping:
            parts = tuple(mapping[s.id])
            statements.append(
                Assembly(
                    id=s.id,
                    category=s.category,
                    pose=s.pose,
                    parts=parts,
                    parent=s.parent,
                    placement_type=s.placement_type,
                )
            )
            gdict[s.id] = parts
        else:
            statements.append(s)
    return (
        SceneProgram(shell=layout.shell, statements=statements, version=layout.version),
        gdict,
    )


def apply_materials(
    program: SceneProgram, assignments: Sequence[MaterialAssign]
) -> SceneProgram:
    """Insert or update material statements; geometry stays untouched.

    A repeated target keeps the last assignment (with a warning). Targets
    must resolve to an object, a part path, the floor, or a wall.
    """
    targets = program.resolvable_targets()
    unresolved = sorted({a.target for a in assignments if a.target not in targets})
    if unresolved:
        raise LinkError(f"material targets do not resolve: {unresolved}")
    statements = list(program.statements)
    index = {
        s.target: i for i, s in enumerate(statements) if s.kind == "material"
    }
    for assign in assignments:
        if assign.target in index:
            logger.warning("material target %r assigned twice; last writer wins", assign.target)
            statements[index[assign.target]] = assign
        else:
            statements.append(assign)
            index[assign.target] = len(statements) - 1
    return SceneProgram(shell=program.shell, statements=statements, version=program.version)


def _is_planar_decor(program: SceneProgram, target: str) -> bool:
    obj = program.find_object(target.split("/", 1)[0])
    return obj is not None and getattr(obj, "placement_type", None) == "wall"


def apply_textures(
    program: SceneProgram,
    binds: Sequence[TextureBind],
    image_root: Optional[Path] = None,
) -> SceneProgram:
    """Bind texture images to targets; geometry stays untouched.

    Binds whose image file is missing fall back to the built-in checker
    reference with a warning. Planar decorative targets (wall-mounted
    items) get an explicit planar UV mapping when none was given.
    """
    targets = program.resolvable_targets()
    unresolved = sorted({b.target for b in binds if b.target not in targets})
    if unresolved:
        raise LinkError(f"texture targets do not resolve: {unresolved}")
    statements = list(program.statements)
    index = {s.target: i for i, s in enumerate(statements) if s.kind == "texture"}
    for bind in binds:
        ref = bind.image_ref
        if not ref.startswith("builtin:"):
            candidate = Path(ref)
            if image_root is not None and not candidate.is_absolute():
                candidate = Path(image_root) / candidate
            if not candidate.exists():
                logger.warning(
                    "texture image %r missing; binding fallback checker", bind.image_ref
                )
                ref = FALLBACK_TEXTURE_REF
        uv = bind.uv_dict()
        if not uv:
            uv = {"mode": "planar"} if _is_planar_decor(program, bind.target) else {
                "mode": "tile",
                "scale": [1.0, 1.0],
            }
        resolved = TextureBind(target=bind.target, image_ref=ref, uv=uv)
        if bind.target in index:
            logger.warning("texture target %r bound twice; last writer wins", bind.target)
            statements[index[bind.target]] = resolved
        else:
            statements.append(resolved)
            index[bind.target] = len(statements) - 1
    return SceneProgram(shell=program.shell, statements=statements, version=program.version)


# ---------------------------------------------------------------------------
# Lighting / render setup
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArtificialLight:
    light_kind: str
    position: Vec3
    intensity: float
    color: Vec3 = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "color", tuple(float(v) for v in self.color))

    def to_dict(self) -> dict:
        return {
            "light_kind": self.light_kind,
            "position": list(self.position),
            "intensity": self.intensity,
            "color": list(self.color),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArtificialLight":
        return cls(
            light_kind=d["light_kind"],
            position=tuple(d["position"]),
            intensity=float(d["intensity"]),
            color=tuple(d.get("color", (1, 1, 1))),
        )


@dataclass(frozen=True)
class LightingPlan:
    """Scene illumination cues: dominant sun, window emitters, lamps, ambient."""

    sun_azimuth: float = -2.2   # radians CCW from +X
    sun_elevation: float = 0.9  # radians above the horizon
    sun_intensity: float = 3.0
    sun_color: Vec3 = (1.0, 0.98, 0.92)
    window_emitters: bool = True
    window_intensity: float = 40.0
    artificial: Tuple[ArtificialLight, ...] = ()
    ambient: float = 0.3

    def __post_init__(self):
        for name in (
            "sun_azimuth",
            "sun_elevation",
            "sun_intensity",
            "window_intensity",
            "ambient",
        ):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "sun_color", tuple(float(v) for v in self.sun_color))
        object.__setattr__(self, "artificial", tuple(self.artificial))

    def to_dict(self) -> dict:
        return {
            "sun_azimuth": self.sun_azimuth,
            "sun_elevation": self.sun_elevation,
            "sun_intensity": self.sun_intensity,
            "sun_color": list(self.sun_color),
            "window_emitters": self.window_emitters,
            "window_intensity": self.window_intensity,
            "artificial": [a.to_dict() for a in self.artificial],
            "ambient": self.ambient,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LightingPlan":
        return cls(
            sun_azimuth=float(d.get("sun_azimuth", -2.2)),
            sun_elevation=float(d.get("sun_elevation", 0.9)),
            sun_intensity=float(d.get("sun_intensity", 3.0)),
            sun_color=tuple(d.get("sun_color", (1.0, 0.98, 0.92))),
            window_emitters=bool(d.get("window_emitters", True)),
            window_intensity=float(d.get("window_intensity", 40.0)),
            artificial=tuple(
                ArtificialLight.from_dict(a) for a in d.get("artificial", [])
            ),
            ambient=float(d.get("ambient", 0.3)),
        )


def _wall_point(shell: RoomShell, cutout: Cutout) -> Tuple[Tuple[float, float, float], float]:
    """World position and inward yaw for a cutout center."""
    wall = next((w for w in shell.walls if w.id == cutout.wall), None)
    if wall is None:
        return ((shell.width / 2.0, shell.depth / 2.0, shell.wall_height / 2.0), 0.0)
    dx = wall.end[0] - wall.start[0]
    dy = wall.end[1] - wall.start[1]
    length = math.hypot(dx, dy) or 1.0
    t = min(1.0, max(0.0, cutout.center / length))
    x = wall.start[0] + dx * t
    y = wall.start[1] + dy * t
    normal = wall_inward_normal(wall, shell)
    yaw = geometry.normalize_yaw(math.atan2(normal[1], normal[0]) - math.pi / 2.0)
    z = cutout.bottom + cutout.height / 2.0
    return ((x, y, z), yaw)


def topdown_camera(shell: RoomShell) -> Camera:
    scale = CAMERA_MARGIN * max(shell.width, shell.depth)
    return Camera(
        camera_kind="topdown_ortho",
        pose=Pose(
            position=(shell.width / 2.0, shell.depth / 2.0, shell.wall_height + 1.0),
            yaw=0.0,
        ),
        scale_or_fov=scale,
    )


def render_setup(program: SceneProgram, lighting: Optional[LightingPlan] = None) -> SceneProgram:
    """Append lights, the top-down camera, and render settings.

    Exactly one orthographic top-down camera covering the shell survives
    (an existing camera statement is replaced). Geometry is untouched.
    """
    plan = lighting or LightingPlan()
    shell = program.shell
    statements = [s for s in program.statements if s.kind not in ("camera", "render_settings")]

    az, el = plan.sun_azimuth, plan.sun_elevation
    direction = (
        -math.cos(az) * math.cos(el),
        -math.sin(az) * math.cos(el),
        -math.sin(el),
    )
    statements.append(
        Light(
            light_kind="sun",
            pose=Pose(
                position=(shell.width / 2.0, shell.depth / 2.0, shell.wall_height + 2.0),
                yaw=0.0,
            ),
            intensity=plan.sun_intensity,
            color=plan.sun_color,
            direction=direction,
        )
    )
    if plan.window_emitters:
        for cutout in shell.cutouts:
            if cutout.kind != "window":
                continue
            position, yaw = _wall_point(shell, cutout)
            statements.append(
                Light(
                    light_kind="area",
                    pose=Pose(position=position, yaw=yaw),
                    intensity=plan.window_intensity,
                    color=(0.95, 0.97, 1.0),
                )
            )
    for lamp in plan.artificial:
        statements.append(
            Light(
                light_kind=lamp.light_kind,
                pose=Pose(position=lamp.position, yaw=0.0),
                intensity=lamp.intensity,
                color=lamp.color,
            )
        )
    statements.append(topdown_camera(shell))
    statements.append(RenderSettings(ambient_strength=plan.ambient))
    return SceneProgram(shell=shell, statements=statements, version=program.version)
