import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from car.assets import (
    AssetLibrary,
    AssetRecord,
    MatchQuery,
    match_score,
    select_asset,
    substitute_placeholder,
)
from car.program import LinkError, Pose, Proxy, SceneProgram, make_shell


def record(asset_id="mug_01", label="mug", description="white ceramic mug",
           size=(0.1, 0.1, 0.12)):
    return AssetRecord(
        asset_id=asset_id,
        label=label,
        description=description,
        size=size,
        tags=("mug",),
        mesh_ref="meshes/mug.obj",
        support_footprint=size[:2],
    )


def library(*records):
    return AssetLibrary(root=None, records=list(records))


class TestMatchScore:
    def test_identical_label_and_size(self):
        r = record()
        q = MatchQuery(label="mug", description="", placeholder_size=r.size)
        assert match_score(r, q) >= 0.8

    def test_disjoint_label_and_far_size(self):
        r = record()
        q = MatchQuery(
            label="wardrobe", description="large oak wardrobe",
            placeholder_size=(1.0, 1.0, 1.2),
        )
        assert match_score(r, q) < 0.1

    def test_self_match_dominates(self):
        target = record("vase_01", "vase", "tall slim vase", (0.15, 0.15, 0.4))
        others = [
            record("mug_01", "mug", "white mug", (0.1, 0.1, 0.12)),
            record("plant_01", "plant", "potted plant", (0.35, 0.35, 0.6)),
        ]
        lib = library(target, *others)
        q = MatchQuery(
            label=target.label, description=target.description,
            placeholder_size=target.size,
        )
        assert select_asset(lib, q).asset_id == "vase_01"

    def test_size_compat_one_iff_equal(self):
        r = record()
        q_equal = MatchQuery("mug", "", r.size)
        q_off = MatchQuery("mug", "", (r.size[0] * 2, r.size[1], r.size[2]))
        # All other terms equal; only the size component changes.
        assert match_score(r, q_equal) > match_score(r, q_off)

    @given(
        st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.floats(0.05, 1.0),
        st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.floats(0.05, 1.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_score_in_unit_interval(self, ax, ay, az, bx, by, bz):
        r = record(size=(ax, ay, az))
        q = MatchQuery("mug cup", "ceramic", (bx, by, bz))
        assert 0.0 <= match_score(r, q) <= 1.0


class TestSelectAsset:
    def test_empty_library(self):
        assert select_asset(library(), MatchQuery("mug", "", (0.1, 0.1, 0.1))) is None

    def test_floor_rejects_poor_matches(self):
        lib = library(record())
        q = MatchQuery("spaceship", "chrome hull", (5.0, 5.0, 5.0))
        assert select_asset(lib, q) is None

    def test_tie_breaks_by_id(self):
        a = record("b_mug", "mug", "white ceramic mug")
        b = record("a_mug", "mug", "white ceramic mug")
        q = MatchQuery("mug", "white ceramic mug", a.size)
        assert select_asset(library(a, b), q).asset_id == "a_mug"

    def test_fixture_library_golden(self, fixtures_root):
        lib = AssetLibrary.load(fixtures_root / "assets" / "index.json")
        assert len(lib.records) == 20
        q = MatchQuery(
            label="plant", description="small potted plant green leaves",
            placeholder_size=(0.35, 0.35, 0.6),
        )
        # Exhaustive scoring over the shipped library.
        best = max(lib.records, key=lambda r: (match_score(r, q), r.asset_id))
        assert select_asset(lib, q).asset_id == best.asset_id == "plant_potted_01"


class TestSubstitution:
    def program_with_placeholder(self, size=(0.1, 0.1, 0.12)):
        p = SceneProgram(shell=make_shell(4, 4))
        p.statements.append(
            Proxy(
                id="cup", category="cup", pose=Pose((2.0, 1.5, 0.75), 0.3),
                size=size, parent="desk", placement_type="surface",
            )
        )
        p.statements.append(
            Proxy(id="desk", category="desk", pose=Pose((2, 1.5, 0)), size=(1.2, 0.6, 0.75))
        )
        return p

    def test_identity_size_gives_unit_scale(self):
        p = self.program_with_placeholder()
        out = substitute_placeholder(p, "cup", record(size=(0.1, 0.1, 0.12)))
        inst = out.find_object("cup")
        assert inst.kind == "asset_instance"
        assert inst.scale == (1.0, 1.0, 1.0)

    def test_half_size_placeholder(self):
        p = self.program_with_placeholder(size=(0.05, 0.05, 0.06))
        out = substitute_placeholder(p, "cup", record(size=(0.1, 0.1, 0.12)))
        assert out.find_object("cup").scale == (0.5, 0.5, 0.5)

    def test_aspect_distortion_clamped(self):
        p = self.program_with_placeholder(size=(0.3, 0.1, 0.12))
        out = substitute_placeholder(p, "cup", record(size=(0.1, 0.1, 0.12)))
        scale = out.find_object("cup").scale
        assert max(scale) / min(scale) <= 1.5 + 1e-9

    def test_pose_and_footprint_center_preserved(self):
        from car import geometry

        p = self.program_with_placeholder()
        before = geometry.footprint_of(p.find_object("cup"))
        out = substitute_placeholder(p, "cup", record())
        after = geometry.footprint_of(out.find_object("cup"))
        assert math.hypot(
            after.center[0] - before.center[0], after.center[1] - before.center[1]
        ) < 1e-3
        assert out.find_object("cup").pose.position[2] == pytest.approx(0.75)
        assert out.find_object("cup").parent == "desk"

    def test_other_statements_untouched(self):
        p = self.program_with_placeholder()
        out = substitute_placeholder(p, "cup", record())
        assert out.find_object("desk") == p.find_object("desk")

    def test_missing_placeholder(self):
        p = SceneProgram(shell=make_shell(4, 4))
        with pytest.raises(LinkError):
            substitute_placeholder(p, "ghost", record())
