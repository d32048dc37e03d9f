"""Constructor runtime called by emitted scene scripts inside Blender.

The function contract mirrors the scene IR statement fields exactly:
ids, positions (meters, Z up), yaw (radians about Z), sizes, PBR material
fields. Built objects are named by their IR ids; construction failures
surface the current statement label through ``_CURRENT``.
"""

from __future__ import annotations

import math
import os

import bpy
import mathutils

from .primitives import parts_geometry

_PART_RANGES = {}
_CURRENT = [""]
_ROOTS = {"asset": "", "texture": ""}

_LIGHT_TYPES = {"sun": "SUN", "point": "POINT", "area": "AREA", "spot": "SPOT"}


def set_roots(asset_root: str, texture_root: str) -> None:
    _ROOTS["asset"] = asset_root or ""
    _ROOTS["texture"] = texture_root or ""


def _mark(label: str) -> None:
    _CURRENT[0] = label


def _set_input(node, names, value) -> bool:
    for name in names:
        sock = node.inputs.get(name)
        if sock is not None:
            sock.default_value = value
            return True
    return False


def _clear_scene() -> None:
    for obj in list(bpy.data.objects):
        bpy.data.objects.remove(obj, do_unlink=True)
    for block in (bpy.data.meshes, bpy.data.materials, bpy.data.lights, bpy.data.cameras):
        for item in list(block):
            if item.users == 0:
                block.remove(item)


def _link(obj):
    bpy.context.scene.collection.objects.link(obj)
    return obj


def _mesh_object(name, verts, faces, position, yaw):
    mesh = bpy.data.meshes.new(name)
    mesh.from_pydata(verts, [], faces)
    mesh.update()
    obj = bpy.data.objects.new(name, mesh)
    obj.location = position
    obj.rotation_euler = (0.0, 0.0, yaw)
    return _link(obj)


def build_shell(width, depth, wall_height, wall_thickness, walls, cutouts):
    """Floor slab plus wall pieces split around door/window cutouts."""
    floor_part = {
        "name": "slab", "primitive": "box",
        "size": (width, depth, 0.05), "offset": (0.0, 0.0, -0.025),
        "rotation": (0.0, 0.0, 0.0),
    }
    verts, faces, ranges = parts_geometry([floor_part])
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
            part = {
                "name": "wall", "primitive": "box",
                "size": (b - a, wall_thickness, hi - lo),
                "offset": (0.0, 0.0, (hi - lo) / 2.0),
                "rotation": (0.0, 0.0, 0.0),
            }
            verts, faces, _ = parts_geometry([part])
            name = wall["id"] if i == 0 else "%s.p%d" % (wall["id"], i)
            _mesh_object(name, verts, faces, center, math.atan2(uy, ux))


def build_object(object_id, category, position, yaw, size, placement_type="floor",
                 parent=None):
    part = {
        "name": "body", "primitive": "box", "size": size,
        "offset": (0.0, 0.0, size[2] / 2.0), "rotation": (0.0, 0.0, 0.0),
    }
    verts, faces, ranges = parts_geometry([part])
    _PART_RANGES[object_id] = ranges
    obj = _mesh_object(object_id, verts, faces, position, yaw)
    obj["category"] = category
    return obj


def build_assembly(object_id, category, position, yaw, parts, placement_type="floor",
                   parent=None):
    verts, faces, ranges = parts_geometry(parts)
    _PART_RANGES[object_id] = ranges
    obj = _mesh_object(object_id, verts, faces, position, yaw)
    obj["category"] = category
    return obj


def build_asset(object_id, category, position, yaw, mesh_ref, scale,
                placement_type="floor", parent=None):
    path = mesh_ref
    if _ROOTS["asset"] and not os.path.isabs(path):
        path = os.path.join(_ROOTS["asset"], path)
    before = set(bpy.data.objects)
    if hasattr(bpy.ops.wm, "obj_import"):
        bpy.ops.wm.obj_import(filepath=path)
    else:  # pre-4.0 import operator
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
        # Transmissive override; input name differs across Blender versions.
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
    mix = tree.nodes.new("ShaderNodeMixRGB")
    _set_input(mix, ("Fac",), 0.15)
    mix.inputs["Color1"].default_value = (base_color[0], base_color[1], base_color[2], 1.0)
    mix.inputs["Color2"].default_value = (
        base_color[0] * 0.8, base_color[1] * 0.8, base_color[2] * 0.8, 1.0
    )
    tree.links.new(noise.outputs["Fac"], mix.inputs["Fac"])
    tree.links.new(mix.outputs["Color"], bsdf.inputs["Base Color"])


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
    mat = _principled_material(target, material_type, base_color, roughness, metallic,
                               specular)
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
        if _ROOTS["texture"] and not os.path.isabs(path):
            path = os.path.join(_ROOTS["texture"], path)
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


def add_light(kind, position, yaw, intensity, color, direction=None):
    data = bpy.data.lights.new("light_%s_%d" % (kind, len(bpy.data.lights)),
                               _LIGHT_TYPES[kind])
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
