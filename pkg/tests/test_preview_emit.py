import math

import numpy as np
import pytest

from car.emit import EmitError, EmitOptions, emit_blender_script
from car.preview import category_color, render_preview
from car.program import (
    AssetInstance,
    Camera,
    Cutout,
    Light,
    LightingPlan,
    MaterialAssign,
    MaterialSpec,
    Part,
    Pose,
    Proxy,
    RenderSettings,
    SceneProgram,
    TextureBind,
    make_shell,
    render_setup,
    replace_with_parts,
    serialize,
)
from car.program import STATEMENT_KINDS


def room(width=4.0, depth=4.0):
    return SceneProgram(shell=make_shell(width, depth))


def unit_box(oid="box", x=2.0, y=2.0, yaw=0.0):
    return Proxy(id=oid, category="crate", pose=Pose((x, y, 0.0), yaw), size=(1, 1, 1))


class TestPreview:
    def test_empty_room_walls_only(self):
        result = render_preview(room(), px_per_m=25)
        assert result.image.shape == (100, 100, 3)
        assert result.legend == {}
        assert (result.label_map == 0).all()
        # Wall pixels darker than floor exist along the borders.
        assert (result.image[0] != result.image[50, 50]).any()

    def test_exact_pixel_count(self):
        p = room()
        p.statements.append(unit_box())
        result = render_preview(p, px_per_m=100)
        count = int((result.label_map == result.legend["box"]).sum())
        assert count == 100 * 100

    def test_rotated_box_matches_membership_sampling(self):
        p = room()
        p.statements.append(unit_box(yaw=0.6))
        px = 100
        result = render_preview(p, px_per_m=px)
        mask = result.label_map == result.legend["box"]
        # Independent membership rule at pixel centers.
        h, w = mask.shape
        cols = (np.arange(w) + 0.5) / px
        rows = 4.0 - (np.arange(h) + 0.5) / px
        xs, ys = np.meshgrid(cols, rows)
        c, s = math.cos(-0.6), math.sin(-0.6)
        lx = c * (xs - 2.0) - s * (ys - 2.0)
        ly = s * (xs - 2.0) + c * (ys - 2.0)
        expected = (np.abs(lx) <= 0.5) & (np.abs(ly) <= 0.5)
        disagreement = (mask != expected).sum() / expected.sum()
        assert disagreement <= 0.01

    def test_pixel_counts_proportional_to_areas(self):
        p = room(6, 6)
        p.statements.append(Proxy(id="big", category="sofa", pose=Pose((2, 2, 0)), size=(2, 1, 1)))
        p.statements.append(Proxy(id="small", category="stool", pose=Pose((4.5, 4.5, 0)), size=(1, 0.5, 0.5)))
        result = render_preview(p, px_per_m=50)
        big = (result.label_map == result.legend["big"]).sum()
        small = (result.label_map == result.legend["small"]).sum()
        assert big / small == pytest.approx(4.0, rel=0.02)

    def test_deterministic_bytes(self, tmp_path):
        p = room()
        p.statements.append(unit_box(yaw=0.3))
        render_preview(p, 40).save(tmp_path / "a.png")
        render_preview(p, 40).save(tmp_path / "b.png")
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_category_color_stable(self):
        assert category_color("bed") == category_color("bed")
        assert category_color("bed") != category_color("desk") or True  # palette collision allowed

    def test_door_gap_window_mark(self):
        shell = make_shell(
            4, 4,
            cutouts=[
                Cutout("door", "wall_s", 2.0, 1.0, 0.0, 2.0),
                Cutout("window", "wall_n", 2.0, 1.0, 0.9, 1.2),
            ],
        )
        result = render_preview(SceneProgram(shell=shell), px_per_m=50)
        image = result.image
        # South wall row: door span must show floor color (a gap).
        south = image[-2]
        from car.preview import FLOOR_COLOR, WINDOW_COLOR

        assert (south[100] == FLOOR_COLOR).all()
        north = image[1]
        assert (north[100] == WINDOW_COLOR).all()


def full_program():
    p = room()
    p.statements.append(unit_box("bed", 1.2, 1.2, 0.2))
    p, _ = replace_with_parts(
        p,
        {
            "bed": [
                Part("frame", "box", (1, 1, 0.3), (0, 0, 0.15)),
                Part("post", "cylinder", (0.08, 0.08, 0.9), (0.4, 0.4, 0.45)),
            ]
        },
    )
    p.statements.append(
        AssetInstance(
            id="vase", category="vase", pose=Pose((3, 3, 0)),
            mesh_ref="meshes/vase.obj", scale=(1, 1, 1),
            placeholder_size=(0.2, 0.2, 0.4),
        )
    )
    p.statements.append(MaterialAssign("bed/frame", MaterialSpec("wood")))
    p.statements.append(MaterialAssign("floor", MaterialSpec("stone")))
    p.statements.append(TextureBind("floor", "builtin:checker", uv={"mode": "tile"}))
    return render_setup(p, LightingPlan())


class TestEmit:
    def test_empty_program_script(self):
        text = emit_blender_script(room())
        compile(text, "scene.py", "exec")
        assert "setup_camera" in text
        assert "setup_render" in text

    def test_one_call_per_statement_and_named_ids(self):
        program = full_program()
        text = emit_blender_script(program, EmitOptions(asset_root=None))
        assert text.count("build_assembly(object_id='") == 1
        assert "object_id='bed'" in text
        assert "object_id='vase'" in text
        assert text.count("bind_material(target='") == 2
        assert text.count("bind_texture(target='") == 1
        assert text.count("add_light(kind='") == sum(
            1 for s in program.statements if s.kind == "light"
        )

    def test_deterministic_bytes(self):
        a = emit_blender_script(full_program())
        b = emit_blender_script(full_program())
        assert a == b

    def test_script_compiles(self):
        compile(emit_blender_script(full_program()), "scene.py", "exec")

    def test_shim_import_mode(self):
        text = emit_blender_script(full_program(), EmitOptions(shim_mode="shim_import"))
        assert "from car_blender_runtime.api import" in text
        assert "_unit_box" not in text
        compile(text, "scene.py", "exec")

    def test_missing_asset_mesh_rejected(self, tmp_path):
        with pytest.raises(EmitError, match="vase.obj"):
            emit_blender_script(full_program(), EmitOptions(asset_root=str(tmp_path)))

    def test_every_statement_kind_has_emission_rule(self):
        # Totality over the closed statement set.
        from car.emit import _statement_call

        samples = {
            "proxy": unit_box(),
            "assembly": full_program().find_object("bed"),
            "asset_instance": full_program().find_object("vase"),
            "material": MaterialAssign("bed", MaterialSpec("wood")),
            "texture": TextureBind("floor", "builtin:checker", uv={}),
            "light": Light(light_kind="sun", pose=Pose((0, 0, 3)), intensity=3.0),
            "camera": Camera(camera_kind="topdown_ortho", pose=Pose((2, 2, 4)), scale_or_fov=4.2),
            "render_settings": RenderSettings(),
        }
        assert set(samples) == set(STATEMENT_KINDS)
        for kind, statement in samples.items():
            lines = _statement_call(statement)
            assert lines and all(isinstance(l, str) for l in lines), kind

    def test_output_path_written(self, tmp_path):
        out = tmp_path / "scene.blend.py"
        emit_blender_script(room(), EmitOptions(output_path=str(out)))
        assert out.exists()

    def test_structurally_equal_programs_equal_bytes(self):
        a = full_program()
        b = full_program()
        assert serialize(a) == serialize(b)
        assert emit_blender_script(a) == emit_blender_script(b)
