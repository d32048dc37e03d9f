"""Headless render driver: build a scene program JSON and render it.

Invocation (Blender batch mode, arguments after the ``--`` separator):

    blender -b -P driver.py -- /path/to/final_program.json /path/to/out.png
            [asset_root] [texture_root]

Exits 0 on success; on any construction failure it prints the failing
statement id to stderr and exits 1. Consumes the scene program purely
through its published JSON schema.
"""

from __future__ import annotations

import json
import sys
import traceback

from . import api


def _tail_args(argv):
    if "--" in argv:
        return argv[argv.index("--") + 1 :]
    return []


def _statement_label(index: int, statement: dict) -> str:
    label = f"statement {index}: {statement.get('kind')}"
    if "id" in statement:
        label += f" {statement['id']}"
    elif "target" in statement:
        label += f" {statement['target']}"
    return label


def build_program(program: dict) -> None:
    """Run one constructor call per statement, in order."""
    shell = program["shell"]
    api._mark("shell")
    api.build_shell(
        width=shell["width"],
        depth=shell["depth"],
        wall_height=shell.get("wall_height", 2.6),
        wall_thickness=shell.get("wall_thickness", 0.1),
        walls=shell.get("walls", []),
        cutouts=shell.get("cutouts", []),
    )
    saw_camera = False
    saw_settings = False
    for index, statement in enumerate(program.get("statements", [])):
        api._mark(_statement_label(index, statement))
        kind = statement["kind"]
        if kind == "proxy":
            api.build_object(
                object_id=statement["id"],
                category=statement["category"],
                position=tuple(statement["pose"]["position"]),
                yaw=statement["pose"].get("yaw", 0.0),
                size=tuple(statement["size"]),
                placement_type=statement.get("placement_type", "floor"),
                parent=statement.get("parent"),
            )
        elif kind == "assembly":
            api.build_assembly(
                object_id=statement["id"],
                category=statement["category"],
                position=tuple(statement["pose"]["position"]),
                yaw=statement["pose"].get("yaw", 0.0),
                parts=statement["parts"],
                placement_type=statement.get("placement_type", "floor"),
                parent=statement.get("parent"),
            )
        elif kind == "asset_instance":
            api.build_asset(
                object_id=statement["id"],
                category=statement["category"],
                position=tuple(statement["pose"]["position"]),
                yaw=statement["pose"].get("yaw", 0.0),
                mesh_ref=statement["mesh_ref"],
                scale=tuple(statement["scale"]),
                placement_type=statement.get("placement_type", "floor"),
                parent=statement.get("parent"),
            )
        elif kind == "material":
            spec = statement["spec"]
            api.bind_material(
                target=statement["target"],
                material_type=spec["material_type"],
                base_color=tuple(spec.get("base_color", (0.8, 0.8, 0.8))),
                roughness=spec.get("roughness", 0.5),
                metallic=spec.get("metallic", 0.0),
                specular=spec.get("specular", 0.5),
            )
        elif kind == "texture":
            api.bind_texture(
                target=statement["target"],
                image_ref=statement["image_ref"],
                uv=statement.get("uv", {}),
            )
        elif kind == "light":
            api.add_light(
                kind=statement["light_kind"],
                position=tuple(statement["pose"]["position"]),
                yaw=statement["pose"].get("yaw", 0.0),
                intensity=statement["intensity"],
                color=tuple(statement.get("color", (1.0, 1.0, 1.0))),
                direction=tuple(statement["direction"]) if statement.get("direction") else None,
            )
        elif kind == "camera":
            api.setup_camera(
                kind=statement["camera_kind"],
                position=tuple(statement["pose"]["position"]),
                yaw=statement["pose"].get("yaw", 0.0),
                scale_or_fov=statement["scale_or_fov"],
            )
            saw_camera = True
        elif kind == "render_settings":
            api.setup_render(
                resolution=tuple(statement.get("resolution", (1024, 1024))),
                sample_count=statement.get("sample_count", 32),
                ambient_strength=statement.get("ambient_strength", 0.3),
            )
            saw_settings = True
        else:
            raise ValueError(f"unknown statement kind {kind!r}")
    if not saw_camera:
        api._mark("implicit camera")
        scale = 1.05 * max(shell["width"], shell["depth"])
        api.setup_camera(
            kind="topdown_ortho",
            position=(shell["width"] / 2.0, shell["depth"] / 2.0,
                      shell.get("wall_height", 2.6) + 1.0),
            yaw=0.0,
            scale_or_fov=scale,
        )
    if not saw_settings:
        api.setup_render((1024, 1024), 32, 0.3)


def main(argv=None) -> int:
    args = _tail_args(argv if argv is not None else sys.argv)
    if not args:
        sys.stderr.write("usage: blender -b -P driver.py -- program.json [out.png]\n")
        return 2
    program_path = args[0]
    render_output = args[1] if len(args) > 1 else None
    api.set_roots(
        args[2] if len(args) > 2 else "",
        args[3] if len(args) > 3 else "",
    )
    try:
        with open(program_path, "r", encoding="utf-8") as handle:
            program = json.load(handle)
        api._clear_scene()
        build_program(program)
        api.finalize(render_output)
    except Exception:
        sys.stderr.write(f"scene construction failed at {api._CURRENT[0]}\n")
        traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
