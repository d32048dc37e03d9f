"""Lower a scene program to an executable Blender script.

The script is deterministic text with one constructor call per statement,
runnable under Blender's headless batch mode:

    blender -b -P scene.blend.py -- /path/to/render.png

``self_contained`` mode inlines the constructor runtime; ``shim_import``
mode calls the same functions from the separately shipped Blender runtime
package.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from .program import SceneProgram

SHIM_MODES = ("self_contained", "shim_import")


class EmitError(ValueError):
    pass


@dataclass(frozen=True)
class EmitOptions:
    shim_mode: str = "self_contained"
    output_path: Optional[str] = None
    embed_textures: bool = False
    asset_root: Optional[str] = None
    texture_root: Optional[str] = None

    def __post_init__(self):
        if self.shim_mode not in SHIM_MODES:
            raise EmitError(f"unknown shim mode {self.shim_mode!r}")


HEADER = '''\
#!/usr/bin/env python3
"""Generated room scene. Run headless:

    blender -b -P <this file> -- [render_output.png]
"""
import json
import math
import os
import sys
import traceback

try:
    import bpy
    import mathutils
except ImportError:
    sys.stderr.write("this script must run inside Blender (bpy missing)\\n")
    sys.exit(2)
'''

# Constructor runtime inlined into self-contained scripts. The shim package
# exports the same function contract.
RUNTIME = r'''
_PART_RANGES = {}
_ASSET_ROOT = globals().get("_ASSET_ROOT", "")
_TEXTURE_ROOT = globals().get("_TEXTURE_ROOT", "")
_CURRENT = [""]


def _mark(label):
    _CURRENT[0] = label


def _set_input(node, names, value):
    for name in names:
        sock = node.inputs.get(name)
        if sock is not None:
            sock.default_value = value
            return True
    return False


def _clear_scene():
    for obj in list(bpy.data.objects):
        bpy.data.objects.remove(obj, do_unlink=True)
    for block in (bpy.data.meshes, bpy.data.materials, bpy.data.lights, bpy.data.cameras):
        for item in list(block):
            if item.users == 0:
                block.remove(item)


def _link(obj):
    bpy.context.scene.collection.objects.link(obj)
    return obj


def _unit_box():
    v = [(-0.5, -0.5, -0.5), (0.5, -0.5, -0.5), (0.5, 0.5, -0.5), (-0.5, 0.5, -0.5),
         (-0.5, -0.5, 0.5), (0.5, -0.5, 0.5), (0.5, 0.5, 0.5), (-0.5, 0.5, 0.5)]
    f = [(0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)]
    return v, f


def _unit_cylinder(n=24):
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


def _unit_sphere(rings=12, segments=24):
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


def _unit_cone(n=24):
    verts = [(0.5 * math.cos(2.0 * math.pi * i / n), 0.5 * math.sin(2.0 * math.pi * i / n), -0.5)
             for i in range(n)]
    verts.append((0.0, 0.0, 0.5))
    faces = [(i, (i + 1) % n, n) for i in range(n)]
    faces.append(tuple(range(n - 1, -1, -1)))
    return verts, faces


def _unit_torus(segments=24, minor_segments=12):
    # Major radius 0.35, tube 0.15: unit diameter in x/y, z rescaled so the
    # tube spans the unit height before part scaling.
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


_PRIMITIVES = {
    "box": _unit_box,
    "plane": _unit_box,  # thin slab; keeps face assignment uniform
    "cylinder": _unit_cylinder,
    "sphere": _unit_sphere,
    "cone": _unit_cone,
    "torus": _unit_torus,
}


def _euler_rotate(point, rotation):
    e = mathutils.Euler(rotation, "XYZ")
    v = mathutils.Vector(point)
    v.rotate(e)
    return (v.x, v.y, v.z)


def _mesh_object(name, verts, faces, position, yaw):
    mesh = bpy.data.meshes.new(name)
    mesh.from_pydata(verts, [], faces)
    mesh.update()
    obj = bpy.data.objects.new(name, mesh)
    obj.location = position
    obj.rotation_euler = (0.0, 0.0, yaw)
    return _link(obj)


def _parts_geometry(parts):
    verts, faces, ranges = [], [], {}
    for part in parts:
        base = len(verts)
        uv_verts, uv_faces = _PRIMITIVES[part["primitive"]]()
        sx, sy, sz = part["size"]
        for v in uv_verts:
            scaled = (v[0] * sx, v[1] * sy, v[2] * sz)
            rotated = _euler_rotate(scaled, part["rotation"])
            verts.append((rotated[0] + part["offset"][0],
                          rotated[1] + part["offset"][1],
                          rotated[2] + part["offset"][2]))
        start = len(faces)
        faces.extend(tuple(base + i for i in f) for f in uv_faces)
        ranges[part["name"]] = (start, len(faces))
    return verts, faces, ranges


def build_shell(width, depth, wall_height, wall_thickness, walls, cutouts):
    floor_part = {"name": "slab", "primitive": "box",
                  "size": (width, depth, 0.05), "offset": (0.0, 0.0, -0.025),
                  "rotation": (0.0, 0.0, 0.0)}
    verts, faces, ranges = _parts_geometry([floor_part])
    _PART_RANGES["floor"] = ranges
    _mesh_object("floor", verts, faces, (width / 2.0, depth / 2.0, 0.0), 0.0)
    for wall in walls:
        ax, ay = wall["start"]
        bx, by = wall["end"]
        length = math.hypot(bx - ax, by - ay)
        if length == 0:
            continue
        ux, uy = (bx - ax) / length, (by - ay) / length
        pieces = [(0.0, length, 0.0, wall_height)]
        for cut in cutouts:
            if cut["wall"] != wall["id"]:
                continue
            c0 = cut["center"] - cut["width"] / 2.0
            c1 = cut["center"] + cut["width"] / 2.0
            z0 = cut["bottom"]
            z1 = cut["bottom"] + cut["height"]
            split = []
            for (a, b, lo, hi) in pieces:
                if c1 <= a or c0 >= b or z1 <= lo or z0 >= hi:
                    split.append((a, b, lo, hi))
                    continue
                if c0 > a:
                    split.append((a, c0, lo, hi))
                if c1 < b:
                    split.append((c1, b, lo, hi))
                ia, ib = max(a, c0), min(b, c1)
                if z0 > lo:
                    split.append((ia, ib, lo, z0))
                if z1 < hi:
                    split.append((ia, ib, z1, hi))
            pieces = split
        for i, (a, b, lo, hi) in enumerate(pieces):
            mid = (a + b) / 2.0
            center = (ax + ux * mid, ay + uy * mid, lo)
            part = {"name": "wall", "primitive": "box",
                    "size": (b - a, wall_thickness, hi - lo),
                    "offset": (0.0, 0.0, (hi - lo) / 2.0),
                    "rotation": (0.0, 0.0, 0.0)}
            verts, faces, _ = _parts_geometry([part])
            name = wall["id"] if i == 0 else "%s.p%d" % (wall["id"], i)
            _mesh_object(name, verts, faces, center, math.atan2(uy, ux))


def build_object(object_id, category, position, yaw, size, placement_type="floor", parent=None):
    part = {"name": "body", "primitive": "box", "size": size,
            "offset": (0.0, 0.0, size[2] / 2.0), "rotation": (0.0, 0.0, 0.0)}
    verts, faces, ranges = _parts_geometry([part])
    _PART_RANGES[object_id] = ranges
    obj = _mesh_object(object_id, verts, faces, position, yaw)
    obj["category"] = category
    return obj


def build_assembly(object_id, category, position, yaw, parts, placement_type="floor", parent=None):
    verts, faces, ranges = _parts_geometry(parts)
    _PART_RANGES[object_id] = ranges
    obj = _mesh_object(object_id, verts, faces, position, yaw)
    obj["category"] = category
    return obj


def build_asset(object_id, category, position, yaw, mesh_ref, scale,
                placement_type="floor", parent=None):
    path = mesh_ref
    if _ASSET_ROOT and not os.path.isabs(path):
        path = os.path.join(_ASSET_ROOT, path)
    before = set(bpy.data.objects)
    if hasattr(bpy.ops.wm, "obj_import"):
        bpy.ops.wm.obj_import(filepath=path)
    else:
        bpy.ops.import_scene.obj(filepath=path)
    imported = [o for o in bpy.data.objects if o not in before]
    if not imported:
        raise RuntimeError("asset import produced no object: %s" % path)
    obj = imported[0]
    for extra in imported[1:]:
        bpy.data.objects.remove(extra, do_unlink=True)
    obj.name = object_id
    obj.location = position
    obj.rotation_euler = (0.0, 0.0, yaw)
    obj.scale = scale
    obj["category"] = category
    return obj


def _principled_material(name, material_type, base_color, roughness, metallic, specular):
    mat = bpy.data.materials.new(name)
    mat.use_nodes = True
    tree = mat.node_tree
    bsdf = None
    for node in tree.nodes:
        if node.bl_idname == "ShaderNodeBsdfPrincipled":
            bsdf = node
            break
    if bsdf is None:
        bsdf = tree.nodes.new("ShaderNodeBsdfPrincipled")
    _set_input(bsdf, ("Base Color",), (base_color[0], base_color[1], base_color[2], 1.0))
    _set_input(bsdf, ("Roughness",), roughness)
    _set_input(bsdf, ("Metallic",), metallic)
    _set_input(bsdf, ("Specular IOR Level", "Specular"), min(specular, 1.0))
    if material_type == "glass":
        _set_input(bsdf, ("Transmission Weight", "Transmission"), 1.0)
        _set_input(bsdf, ("Roughness",), min(roughness, 0.1))
    elif material_type == "mirror":
        _set_input(bsdf, ("Metallic",), 1.0)
        _set_input(bsdf, ("Roughness",), min(roughness, 0.05))
    return mat


def _add_procedural_noise(mat, base_color):
    tree = mat.node_tree
    bsdf = next(n for n in tree.nodes if n.bl_idname == "ShaderNodeBsdfPrincipled")
    noise = tree.nodes.new("ShaderNodeTexNoise")
    _set_input(noise, ("Scale",), 8.0)
    ramp = tree.nodes.new("ShaderNodeMixRGB")
    _set_input(ramp, ("Fac",), 0.15)
    ramp.inputs["Color1"].default_value = (base_color[0], base_color[1], base_color[2], 1.0)
    ramp.inputs["Color2"].default_value = (base_color[0] * 0.8, base_color[1] * 0.8,
                                           base_color[2] * 0.8, 1.0)
    tree.links.new(noise.outputs["Fac"], ramp.inputs["Fac"])
    tree.links.new(ramp.outputs["Color"], bsdf.inputs["Base Color"])


def _target_objects(target):
    root = target.split("/", 1)[0]
    out = []
    for obj in bpy.data.objects:
        if obj.name == root or obj.name.startswith(root + ".p"):
            out.append(obj)
    return out


def bind_material(target, material_type, base_color, roughness, metallic, specular):
    root = target.split("/", 1)[0]
    part = target.split("/", 1)[1] if "/" in target else None
    mat = _principled_material(target, material_type, base_color, roughness, metallic, specular)
    if root == "floor" or root.startswith("wall"):
        _add_procedural_noise(mat, base_color)
    for obj in _target_objects(target):
        if obj.type != "MESH":
            continue
        if part is None:
            obj.data.materials.clear()
            obj.data.materials.append(mat)
            for poly in obj.data.polygons:
                poly.material_index = 0
        else:
            obj.data.materials.append(mat)
            slot = len(obj.data.materials) - 1
            ranges = _PART_RANGES.get(root, {})
            if part in ranges:
                start, end = ranges[part]
                for poly in obj.data.polygons[start:end]:
                    poly.material_index = slot


def bind_texture(target, image_ref, uv):
    objects = _target_objects(target)
    if not objects:
        return
    obj = objects[0]
    if obj.type != "MESH" or not obj.data.materials:
        bind_material(target.split("/", 1)[0], "generic", (0.8, 0.8, 0.8), 0.6, 0.0, 0.5)
        obj = _target_objects(target)[0]
    mat = obj.data.materials[0]
    tree = mat.node_tree
    tex = tree.nodes.new("ShaderNodeTexImage")
    if image_ref.startswith("builtin:"):
        image = bpy.data.images.new(image_ref, width=512, height=512)
        image.generated_type = "COLOR_GRID"
    else:
        path = image_ref
        if _TEXTURE_ROOT and not os.path.isabs(path):
            path = os.path.join(_TEXTURE_ROOT, path)
        image = bpy.data.images.load(path)
    tex.image = image
    coords = tree.nodes.new("ShaderNodeTexCoord")
    mapping = tree.nodes.new("ShaderNodeMapping")
    source = "Generated" if uv.get("mode") == "planar" else "UV"
    if coords.outputs.get(source) is None:
        source = "Generated"
    tree.links.new(coords.outputs[source], mapping.inputs["Vector"])
    scale = uv.get("scale", [1.0, 1.0])
    _set_input(mapping, ("Scale",), (scale[0], scale[1], 1.0))
    tree.links.new(mapping.outputs["Vector"], tex.inputs["Vector"])
    bsdf = next(n for n in tree.nodes if n.bl_idname == "ShaderNodeBsdfPrincipled")
    tree.links.new(tex.outputs["Color"], bsdf.inputs["Base Color"])


_LIGHT_TYPES = {"sun": "SUN", "point": "POINT", "area": "AREA", "spot": "SPOT"}


def add_light(kind, position, yaw, intensity, color, direction=None):
    data = bpy.data.lights.new("light_%s_%d" % (kind, len(bpy.data.lights)), _LIGHT_TYPES[kind])
    data.energy = intensity
    data.color = color
    obj = bpy.data.objects.new(data.name, data)
    obj.location = position
    obj.rotation_euler = (0.0, 0.0, yaw)
    if direction is not None:
        vec = mathutils.Vector(direction)
        if vec.length > 0:
            obj.rotation_euler = vec.to_track_quat("-Z", "Y").to_euler()
    _link(obj)
    return obj


def setup_camera(kind, position, yaw, scale_or_fov):
    data = bpy.data.cameras.new("camera")
    if kind == "topdown_ortho":
        data.type = "ORTHO"
        data.ortho_scale = scale_or_fov
    else:
        data.type = "PERSP"
        data.angle = scale_or_fov
    obj = bpy.data.objects.new("camera", data)
    obj.location = position
    obj.rotation_euler = (0.0, 0.0, yaw)
    _link(obj)
    bpy.context.scene.camera = obj
    return obj


def setup_render(resolution, sample_count, ambient_strength):
    scene = bpy.context.scene
    scene.render.resolution_x = resolution[0]
    scene.render.resolution_y = resolution[1]
    try:
        scene.render.engine = "CYCLES"
        scene.cycles.samples = sample_count
    except Exception:
        pass
    world = bpy.data.worlds.new("world") if scene.world is None else scene.world
    scene.world = world
    world.use_nodes = True
    bg = world.node_tree.nodes.get("Background")
    if bg is not None:
        _set_input(bg, ("Strength",), ambient_strength)


def finalize(render_output):
    if render_output:
        bpy.context.scene.render.filepath = render_output
        bpy.context.scene.render.image_settings.file_format = "PNG"
        bpy.ops.render.render(write_still=True)
'''

MAIN = '''
def _render_target():
    argv = sys.argv
    if "--" in argv:
        tail = argv[argv.index("--") + 1:]
        if tail:
            return tail[0]
    return None


def main():
    _clear_scene()
    _build()
    finalize(_render_target())


if __name__ == "__main__":
    try:
        main()
    except Exception:
        sys.stderr.write("scene construction failed at %s\\n" % _CURRENT[0])
        traceback.print_exc()
        sys.exit(1)
    sys.exit(0)
'''


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "(" + ", ".join(_fmt(v) for v in value) + ("," if len(value) == 1 else "") + ")"
    return repr(value)


def _statement_call(statement) -> List[str]:
    kind = statement.kind
    if kind == "proxy":
        return [
            "build_object(object_id=%s, category=%s, position=%s, yaw=%s, size=%s, "
            "placement_type=%s, parent=%s)"
            % (
                _fmt(statement.id),
                _fmt(statement.category),
                _fmt(statement.pose.position),
                _fmt(statement.pose.yaw),
                _fmt(statement.size),
                _fmt(statement.placement_type),
                _fmt(statement.parent),
            )
        ]
    if kind == "assembly":
        parts = ", ".join(
            "{'name': %s, 'primitive': %s, 'size': %s, 'offset': %s, 'rotation': %s}"
            % (
                _fmt(p.name),
                _fmt(p.primitive),
                _fmt(p.size),
                _fmt(p.offset),
                _fmt(p.rotation),
            )
            for p in statement.parts
        )
        return [
            "build_assembly(object_id=%s, category=%s, position=%s, yaw=%s, parts=[%s], "
            "placement_type=%s, parent=%s)"
            % (
                _fmt(statement.id),
                _fmt(statement.category),
                _fmt(statement.pose.position),
                _fmt(statement.pose.yaw),
                parts,
                _fmt(statement.placement_type),
                _fmt(statement.parent),
            )
        ]
    if kind == "asset_instance":
        return [
            "build_asset(object_id=%s, category=%s, position=%s, yaw=%s, mesh_ref=%s, "
            "scale=%s, placement_type=%s, parent=%s)"
            % (
                _fmt(statement.id),
                _fmt(statement.category),
                _fmt(statement.pose.position),
                _fmt(statement.pose.yaw),
                _fmt(statement.mesh_ref),
                _fmt(statement.scale),
                _fmt(statement.placement_type),
                _fmt(statement.parent),
            )
        ]
    if kind == "material":
        spec = statement.spec
        return [
            "bind_material(target=%s, material_type=%s, base_color=%s, roughness=%s, "
            "metallic=%s, specular=%s)"
            % (
                _fmt(statement.target),
                _fmt(spec.material_type),
                _fmt(spec.base_color),
                _fmt(spec.roughness),
                _fmt(spec.metallic),
                _fmt(spec.specular),
            )
        ]
    if kind == "texture":
        uv = statement.uv_dict()
        uv_text = "{" + ", ".join(f"{k!r}: {_fmt(v)}" for k, v in sorted(uv.items())) + "}"
        return [
            "bind_texture(target=%s, image_ref=%s, uv=%s)"
            % (_fmt(statement.target), _fmt(statement.image_ref), uv_text)
        ]
    if kind == "light":
        return [
            "add_light(kind=%s, position=%s, yaw=%s, intensity=%s, color=%s, direction=%s)"
            % (
                _fmt(statement.light_kind),
                _fmt(statement.pose.position),
                _fmt(statement.pose.yaw),
                _fmt(statement.intensity),
                _fmt(statement.color),
                _fmt(statement.direction) if statement.direction else "None",
            )
        ]
    if kind == "camera":
        return [
            "setup_camera(kind=%s, position=%s, yaw=%s, scale_or_fov=%s)"
            % (
                _fmt(statement.camera_kind),
                _fmt(statement.pose.position),
                _fmt(statement.pose.yaw),
                _fmt(statement.scale_or_fov),
            )
        ]
    if kind == "render_settings":
        return [
            "setup_render(resolution=%s, sample_count=%s, ambient_strength=%s)"
            % (
                _fmt(statement.resolution),
                _fmt(statement.sample_count),
                _fmt(statement.ambient_strength),
            )
        ]
    raise EmitError(f"no emission rule for statement kind {kind!r}")


def _shell_call(shell) -> str:
    walls = ", ".join(
        "{'id': %s, 'start': %s, 'end': %s}" % (_fmt(w.id), _fmt(w.start), _fmt(w.end))
        for w in shell.walls
    )
    cutouts = ", ".join(
        "{'kind': %s, 'wall': %s, 'center': %s, 'width': %s, 'bottom': %s, 'height': %s}"
        % (
            _fmt(c.kind),
            _fmt(c.wall),
            _fmt(c.center),
            _fmt(c.width),
            _fmt(c.bottom),
            _fmt(c.height),
        )
        for c in shell.cutouts
    )
    return (
        "build_shell(width=%s, depth=%s, wall_height=%s, wall_thickness=%s, walls=[%s], "
        "cutouts=[%s])"
        % (
            _fmt(shell.width),
            _fmt(shell.depth),
            _fmt(shell.wall_height),
            _fmt(shell.wall_thickness),
            walls,
            cutouts,
        )
    )


def _check_assets(program: SceneProgram, opts: EmitOptions) -> None:
    missing = []
    for s in program.objects():
        if s.kind != "asset_instance":
            continue
        path = Path(s.mesh_ref)
        if not path.is_absolute():
            if opts.asset_root is None:
                continue  # resolution deferred to the runtime's asset root
            path = Path(opts.asset_root) / path
        if not path.exists():
            missing.append(s.mesh_ref)
    if missing:
        raise EmitError(f"asset meshes not found: {sorted(set(missing))}")


def _embedded_textures(program: SceneProgram, opts: EmitOptions) -> str:
    rows = []
    for s in program.statements:
        if s.kind != "texture" or s.image_ref.startswith("builtin:"):
            continue
        path = Path(s.image_ref)
        if opts.texture_root and not path.is_absolute():
            path = Path(opts.texture_root) / path
        if path.exists():
            data = base64.b64encode(path.read_bytes()).decode("ascii")
            rows.append(f"    {s.image_ref!r}: {data!r},")
    body = "\n".join(rows)
    return (
        "_EMBEDDED_TEXTURES = {\n" + body + "\n}\n"
        "import tempfile as _tempfile, base64 as _base64\n"
        "_TEX_DIR = _tempfile.mkdtemp(prefix='scene_tex_')\n"
        "for _ref, _blob in _EMBEDDED_TEXTURES.items():\n"
        "    _p = os.path.join(_TEX_DIR, os.path.basename(_ref))\n"
        "    open(_p, 'wb').write(_base64.b64decode(_blob))\n"
        "_TEXTURE_ROOT = _TEX_DIR\n"
    )


def emit_blender_script(program: SceneProgram, opts: Optional[EmitOptions] = None) -> str:
    """Deterministic script text: one constructor call per IR statement."""
    opts = opts or EmitOptions()
    program.validate()
    _check_assets(program, opts)

    lines: List[str] = [HEADER]
    lines.append(f"_ASSET_ROOT = {str(opts.asset_root or '')!r}")
    if opts.texture_root == "@run":
        # Textures live one level above the emitted script (out/ -> run dir),
        # resolved at run time so the script stays byte-identical across runs.
        lines.append(
            "_TEXTURE_ROOT = os.path.normpath(os.path.join("
            "os.path.dirname(os.path.abspath(__file__)), '..'))"
        )
    else:
        lines.append(f"_TEXTURE_ROOT = {str(opts.texture_root or '')!r}")
    if opts.shim_mode == "shim_import":
        lines.append(
            "from car_blender_runtime.api import (_mark, _clear_scene, build_shell, "
            "build_object, build_assembly, build_asset, bind_material, bind_texture, "
            "add_light, setup_camera, setup_render, finalize, set_roots, _CURRENT)"
        )
        lines.append("set_roots(_ASSET_ROOT, _TEXTURE_ROOT)")
    else:
        lines.append(RUNTIME)
        if opts.embed_textures:
            lines.append(_embedded_textures(program, opts))

    lines.append("\ndef _build():")
    body: List[str] = []
    body.append(f"_mark('shell')")
    body.append(_shell_call(program.shell))
    for i, statement in enumerate(program.statements):
        label = f"statement {i}: {statement.kind}"
        if statement.kind in ("proxy", "assembly", "asset_instance"):
            label += f" {statement.id}"
        elif statement.kind in ("material", "texture"):
            label += f" {statement.target}"
        body.append(f"_mark({label!r})")
        body.extend(_statement_call(statement))
    if program.camera() is None:
        # A scene with no camera statement still needs one to render.
        body.append("_mark('implicit camera')")
        shell = program.shell
        scale = 1.05 * max(shell.width, shell.depth)
        body.append(
            "setup_camera(kind='topdown_ortho', position=%s, yaw=0.0, scale_or_fov=%s)"
            % (
                _fmt((shell.width / 2.0, shell.depth / 2.0, shell.wall_height + 1.0)),
                _fmt(scale),
            )
        )
    if not any(s.kind == "render_settings" for s in program.statements):
        body.append("setup_render(resolution=(1024, 1024), sample_count=32, ambient_strength=0.3)")
    lines.extend("    " + row for row in body)
    lines.append(MAIN)
    text = "\n".join(lines)
    if opts.output_path:
        out = Path(opts.output_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    return text
