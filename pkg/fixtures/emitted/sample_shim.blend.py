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
    sys.stderr.write("this script must run inside Blender (bpy missing)\n")
    sys.exit(2)

_ASSET_ROOT = ''
_TEXTURE_ROOT = ''
from car_blender_runtime.api import (_mark, _clear_scene, build_shell, build_object, build_assembly, build_asset, bind_material, bind_texture, add_light, setup_camera, setup_render, finalize, set_roots, _CURRENT)
set_roots(_ASSET_ROOT, _TEXTURE_ROOT)

def _build():
    _mark('shell')
    build_shell(width=4.0, depth=4.0, wall_height=2.6, wall_thickness=0.1, walls=[{'id': 'wall_s', 'start': (0.0, 0.0), 'end': (4.0, 0.0)}, {'id': 'wall_e', 'start': (4.0, 0.0), 'end': (4.0, 4.0)}, {'id': 'wall_n', 'start': (4.0, 4.0), 'end': (0.0, 4.0)}, {'id': 'wall_w', 'start': (0.0, 4.0), 'end': (0.0, 0.0)}], cutouts=[{'kind': 'door', 'wall': 'wall_s', 'center': 2.0, 'width': 0.9, 'bottom': 0.0, 'height': 2.0}, {'kind': 'window', 'wall': 'wall_n', 'center': 2.0, 'width': 1.0, 'bottom': 0.9, 'height': 1.2}])
    _mark('statement 0: proxy bed')
    build_object(object_id='bed', category='bed', position=(1.0, 2.0, 0.0), yaw=0.0, size=(1.6, 2.0, 0.5), placement_type='floor', parent=None)
    _mark('statement 1: assembly desk')
    build_assembly(object_id='desk', category='desk', position=(3.0, 1.0, 0.0), yaw=1.5707963267948966, parts=[{'name': 'top', 'primitive': 'box', 'size': (1.2, 0.6, 0.05), 'offset': (0.0, 0.0, 0.725), 'rotation': (0.0, 0.0, 0.0)}, {'name': 'leg_a', 'primitive': 'cylinder', 'size': (0.05, 0.05, 0.7), 'offset': (0.55, 0.25, 0.35), 'rotation': (0.0, 0.0, 0.0)}, {'name': 'leg_b', 'primitive': 'cylinder', 'size': (0.05, 0.05, 0.7), 'offset': (-0.55, -0.25, 0.35), 'rotation': (0.0, 0.0, 0.0)}], placement_type='floor', parent=None)
    _mark('statement 2: material bed')
    bind_material(target='bed', material_type='fabric', base_color=(0.8, 0.78, 0.74), roughness=0.9, metallic=0.0, specular=0.5)
    _mark('statement 3: material desk/top')
    bind_material(target='desk/top', material_type='wood', base_color=(0.55, 0.4, 0.26), roughness=0.4, metallic=0.0, specular=0.5)
    _mark('statement 4: material floor')
    bind_material(target='floor', material_type='stone', base_color=(0.6, 0.6, 0.58), roughness=0.7, metallic=0.0, specular=0.5)
    _mark('statement 5: texture floor')
    bind_texture(target='floor', image_ref='builtin:checker', uv={'mode': 'tile', 'scale': (4.0, 4.0)})
    _mark('statement 6: light')
    add_light(kind='sun', position=(2.0, 2.0, 4.6), yaw=0.0, intensity=3.0, color=(1.0, 0.98, 0.92), direction=(0.36581816082434604, 0.5025694239252416, -0.7833269096274834))
    _mark('statement 7: light')
    add_light(kind='area', position=(2.0, 4.0, 1.5), yaw=-3.141592653589793, intensity=40.0, color=(0.95, 0.97, 1.0), direction=None)
    _mark('statement 8: camera')
    setup_camera(kind='topdown_ortho', position=(2.0, 2.0, 3.6), yaw=0.0, scale_or_fov=4.2)
    _mark('statement 9: render_settings')
    setup_render(resolution=(1024, 1024), sample_count=32, ambient_strength=0.3)

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
        sys.stderr.write("scene construction failed at %s\n" % _CURRENT[0])
        traceback.print_exc()
        sys.exit(1)
    sys.exit(0)
