#!/usr/bin/env python3
"""Build the shipped fixture suite: three scenes with scripted provider
tables, ground-truth annotations, input images, and a small asset library.

Run from the repository root:

    python scripts/make_fixtures.py [--out fixtures]

Outputs are canonical JSON and deterministic PNGs; rerunning reproduces
identical bytes.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from car import metrics as metrics_mod  # noqa: E402
from car.jsonio import write_json  # noqa: E402
from car.preview import render_preview  # noqa: E402
from car.program import (  # noqa: E402
    Cutout,
    Pose,
    Proxy,
    SceneProgram,
    make_shell,
    snap_to_wall,
)

PI = math.pi


# ---------------------------------------------------------------------------
# Asset library
# ---------------------------------------------------------------------------

CUBE_OBJ = """o cube
v -0.5 -0.5 0.0
v 0.5 -0.5 0.0
v 0.5 0.5 0.0
v -0.5 0.5 0.0
v -0.5 -0.5 1.0
v 0.5 -0.5 1.0
v 0.5 0.5 1.0
v -0.5 0.5 1.0
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
"""

ASSETS = [
    ("mug_ceramic_01", "mug", "white ceramic coffee mug glossy", (0.09, 0.09, 0.11)),
    ("mug_stone_02", "mug", "speckled stoneware mug matte", (0.10, 0.10, 0.12)),
    ("cup_glass_01", "cup", "clear drinking glass cup", (0.08, 0.08, 0.12)),
    ("cup_paper_02", "cup", "disposable paper coffee cup", (0.08, 0.08, 0.11)),
    ("plant_potted_01", "plant", "small potted plant green leaves clay pot", (0.35, 0.35, 0.6)),
    ("plant_fern_02", "plant", "potted fern bushy dark green", (0.45, 0.45, 0.55)),
    ("plant_succulent_03", "plant", "tiny succulent in concrete pot", (0.12, 0.12, 0.15)),
    ("vase_tall_01", "vase", "tall slim ceramic vase white", (0.15, 0.15, 0.45)),
    ("vase_round_02", "vase", "round glass vase clear", (0.2, 0.2, 0.25)),
    ("vase_clay_03", "vase", "rustic clay vase terracotta", (0.18, 0.18, 0.3)),
    ("book_stack_01", "book", "stack of three hardcover books", (0.22, 0.16, 0.12)),
    ("book_single_02", "book", "single paperback book", (0.2, 0.13, 0.03)),
    ("bottle_wine_01", "bottle", "dark glass wine bottle", (0.08, 0.08, 0.3)),
    ("bottle_water_02", "bottle", "clear plastic water bottle", (0.07, 0.07, 0.25)),
    ("bowl_wood_01", "bowl", "shallow wooden fruit bowl", (0.28, 0.28, 0.09)),
    ("bowl_ceramic_02", "bowl", "deep ceramic serving bowl blue", (0.24, 0.24, 0.12)),
    ("clock_desk_01", "clock", "small round desk clock metal", (0.12, 0.06, 0.12)),
    ("clock_wall_02", "clock", "round wall clock white face", (0.3, 0.05, 0.3)),
    ("sculpture_abstract_01", "sculpture", "abstract metal sculpture", (0.15, 0.15, 0.4)),
    ("lamp_table_01", "lamp", "small table lamp fabric shade", (0.18, 0.18, 0.35)),
]


def build_assets(root: Path) -> None:
    mesh_dir = root / "meshes"
    mesh_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for asset_id, label, description, size in ASSETS:
        mesh_rel = f"meshes/{asset_id}.obj"
        (root / mesh_rel).write_text(CUBE_OBJ, encoding="utf-8")
        records.append(
            {
                "asset_id": asset_id,
                "label": label,
                "description": description,
                "size": list(size),
                "tags": sorted(set(description.split()[:3])),
                "mesh_ref": mesh_rel,
                "support_footprint": [size[0], size[1]],
            }
        )
    write_json(root / "index.json", {"schema": "car/assets/v1", "assets": records})


# ---------------------------------------------------------------------------
# Scene definitions
# ---------------------------------------------------------------------------


def _obj(oid, category, placement, pos, yaw, size, parent=None, zone=None,
         minor=False, salience=1.0, anchor=None):
    """One scene object: description row + ground-truth placement."""
    return {
        "id": oid,
        "category": category,
        "placement_type": placement,
        "parent": parent,
        "size_hint": list(size),
        "zone": zone,
        "minor": minor,
        "salience": salience,
        "anchor": anchor,
        "_pos": pos,
        "_yaw": yaw,
        "_size": size,
    }


def bedroom_scene() -> dict:
    width, depth = 4.0, 5.0
    objects = [
        _obj("bed", "bed", "floor", (1.0, 3.6, 0.0), 0.0, (1.6, 2.1, 0.55), zone="sleeping"),
        _obj("nightstand", "nightstand", "floor", (2.15, 4.5, 0.0), 0.0, (0.5, 0.45, 0.55), zone="sleeping"),
        _obj("wardrobe", "wardrobe", "floor", (3.35, 4.6, 0.0), 0.0, (1.2, 0.6, 2.0), zone="storage"),
        _obj("desk", "desk", "floor", (3.55, 1.8, 0.0), PI / 2, (1.2, 0.6, 0.75), zone="work"),
        _obj("chair", "chair", "floor", (2.9, 1.8, 0.0), -PI / 2, (0.45, 0.45, 0.9), zone="work"),
        _obj("bookshelf", "bookshelf", "floor", (0.6, 0.25, 0.0), 0.0, (0.9, 0.3, 1.8), zone="storage"),
        _obj("poster", "poster", "wall", (0.1, 2.6, 1.4), 0.0, (0.6, 0.03, 0.9),
             anchor={"kind": "against_wall", "target": "wall_w"}),
        _obj("clock", "clock", "wall", (3.9, 2.8, 1.9), 0.0, (0.3, 0.04, 0.3),
             anchor={"kind": "against_wall", "target": "wall_e"}),
        _obj("rug", "rug", "floor", (2.6, 3.0, 0.0), 0.0, (1.6, 1.1, 0.02), minor=True, salience=0.8),
        _obj("floor_lamp", "floor_lamp", "floor", (0.3, 0.8, 0.0), 0.0, (0.35, 0.35, 1.5), minor=True, salience=0.7),
        _obj("lamp", "lamp", "surface", None, 0.0, (0.18, 0.18, 0.35), parent="nightstand", salience=0.9),
        _obj("cup", "cup", "surface", None, 0.0, (0.08, 0.08, 0.1), parent="desk", salience=0.2),
    ]
    return {
        "scene_id": "bedroom",
        "extent": (width, depth),
        "door": {"wall": "wall_s", "center": 2.2, "width": 0.9, "height": 2.0},
        "window": {"wall": "wall_n", "center": 2.0, "width": 1.2, "sill": 0.9, "height": 1.2},
        "objects": objects,
        "zones": [
            {"label": "sleeping", "polygon": [[0.0, 0.45], [0.6, 0.45], [0.6, 1.0], [0.0, 1.0]],
             "anchors": ["bed", "nightstand"]},
            {"label": "work", "polygon": [[0.55, 0.2], [1.0, 0.2], [1.0, 0.55], [0.55, 0.55]],
             "anchors": ["desk", "chair"]},
            {"label": "storage", "polygon": [[0.6, 0.8], [1.0, 0.8], [1.0, 1.0], [0.6, 1.0]],
             "anchors": ["wardrobe"]},
        ],
        "relations": [
            ["bed", "left_of", "wardrobe"],
            ["nightstand", "adjacent_to", "bed"],
            ["chair", "left_of", "desk"],
            ["chair", "faces", "desk"],
            ["lamp", "on_top_of", "nightstand"],
            ["cup", "on_top_of", "desk"],
            ["bookshelf", "front_of", "bed"],
            ["rug", "behind", "bookshelf"],
            ["wardrobe", "right_of", "bed"],
            ["floor_lamp", "adjacent_to", "bookshelf"],
        ],
        "initial_majors": {
            "bed": ((0.8, 3.3, 0.0), 0.25),
            "nightstand": ((2.3, 4.3, 0.0), 0.0),
            "wardrobe": ((3.6, 4.6, 0.0), 0.1),
            "desk": ((3.5, 1.6, 0.0), PI / 2),
            "chair": ((3.2, 1.9, 0.0), -PI / 2),
            "bookshelf": ((0.5, 0.45, 0.0), 0.15),
        },
        # After revision the chair still nudges the desk; the stage-10
        # corrector resolves it.
        "revised_majors": {
            "bed": ((1.0, 3.6, 0.0), 0.0),
            "nightstand": ((2.15, 4.5, 0.0), 0.0),
            "wardrobe": ((3.35, 4.6, 0.0), 0.0),
            "desk": ((3.55, 1.8, 0.0), PI / 2),
            "chair": ((3.05, 1.8, 0.0), -PI / 2),
            "bookshelf": ((0.6, 0.25, 0.0), 0.0),
        },
        "adversarial_edges": [
            {"src": "bed", "relation": "left_of", "dst": "wardrobe"},
            {"src": "nightstand", "relation": "adjacent_to", "dst": "bed"},
            {"src": "chair", "relation": "faces", "dst": "desk"},
            {"src": "bookshelf", "relation": "front_of", "dst": "bed"},
            {"src": "desk", "relation": "right_of", "dst": "bed"},
            {"src": "bed", "relation": "left_of", "dst": "ghost_chair"},
            {"src": "wall_n", "relation": "adjacent_to", "dst": "wall_s"},
            {"src": "bed", "relation": "left_of", "dst": "wardrobe"},
        ],
        "parts": {
            "bed": [
                {"name": "frame", "primitive": "box", "size": [1.6, 2.1, 0.25], "offset": [0.0, 0.0, 0.125]},
                {"name": "mattress", "primitive": "box", "size": [1.5, 2.0, 0.2], "offset": [0.0, 0.0, 0.35]},
                {"name": "headboard", "primitive": "box", "size": [1.6, 0.08, 0.55], "offset": [0.0, 1.01, 0.275]},
            ],
            "nightstand": [
                {"name": "body", "primitive": "box", "size": [0.5, 0.45, 0.55], "offset": [0.0, 0.0, 0.275]},
            ],
            "wardrobe": [
                {"name": "body", "primitive": "box", "size": [1.2, 0.6, 2.0], "offset": [0.0, 0.0, 1.0]},
                {"name": "door_left", "primitive": "box", "size": [0.58, 0.02, 1.9], "offset": [-0.3, 0.31, 0.95]},
                {"name": "door_right", "primitive": "box", "size": [0.58, 0.02, 1.9], "offset": [0.3, 0.31, 0.95]},
            ],
            "desk": [
                {"name": "top", "primitive": "box", "size": [1.2, 0.6, 0.05], "offset": [0.0, 0.0, 0.725]},
                {"name": "leg_fl", "primitive": "cylinder", "size": [0.05, 0.05, 0.7], "offset": [0.55, 0.25, 0.35]},
                {"name": "leg_fr", "primitive": "cylinder", "size": [0.05, 0.05, 0.7], "offset": [-0.55, 0.25, 0.35]},
                {"name": "leg_bl", "primitive": "cylinder", "size": [0.05, 0.05, 0.7], "offset": [0.55, -0.25, 0.35]},
                {"name": "leg_br", "primitive": "cylinder", "size": [0.05, 0.05, 0.7], "offset": [-0.55, -0.25, 0.35]},
            ],
            "chair": [
                {"name": "seat", "primitive": "box", "size": [0.45, 0.45, 0.08], "offset": [0.0, 0.0, 0.46]},
                {"name": "back", "primitive": "box", "size": [0.45, 0.06, 0.42], "offset": [0.0, -0.195, 0.69]},
                {"name": "legs", "primitive": "box", "size": [0.4, 0.4, 0.42], "offset": [0.0, 0.0, 0.21]},
            ],
            "bookshelf": [
                {"name": "carcass", "primitive": "box", "size": [0.9, 0.3, 1.8], "offset": [0.0, 0.0, 0.9]},
            ],
            "poster": [
                {"name": "sheet", "primitive": "plane", "size": [0.6, 0.03, 0.9], "offset": [0.0, 0.0, 0.45]},
            ],
            "clock": [
                {"name": "face", "primitive": "cylinder", "size": [0.3, 0.3, 0.04],
                 "offset": [0.0, 0.0, 0.15], "rotation": [PI / 2, 0.0, 0.0]},
            ],
            "rug": [
                {"name": "pile", "primitive": "plane", "size": [1.6, 1.1, 0.02], "offset": [0.0, 0.0, 0.01]},
            ],
            "floor_lamp": [
                {"name": "base", "primitive": "cylinder", "size": [0.3, 0.3, 0.04], "offset": [0.0, 0.0, 0.02]},
                {"name": "pole", "primitive": "cylinder", "size": [0.04, 0.04, 1.2], "offset": [0.0, 0.0, 0.64]},
                {"name": "shade", "primitive": "cone", "size": [0.35, 0.35, 0.26], "offset": [0.0, 0.0, 1.37]},
            ],
        },
        "retrieval": ["cup"],
        "materials": [
            {"target": "bed/frame", "material_type": "wood", "base_color": [0.42, 0.28, 0.18], "roughness": 0.6},
            {"target": "bed/mattress", "material_type": "fabric", "base_color": [0.92, 0.9, 0.86], "roughness": 0.9},
            {"target": "bed/headboard", "material_type": "wood", "base_color": [0.4, 0.26, 0.16], "roughness": 0.6},
            {"target": "nightstand", "material_type": "wood", "base_color": [0.45, 0.31, 0.2], "roughness": 0.55},
            {"target": "wardrobe/body", "material_type": "wood", "base_color": [0.5, 0.36, 0.24], "roughness": 0.5},
            {"target": "wardrobe/door_left", "material_type": "mirror", "base_color": [0.9, 0.9, 0.92], "roughness": 0.05, "metallic": 1.0},
            {"target": "wardrobe/door_right", "material_type": "wood", "base_color": [0.5, 0.36, 0.24], "roughness": 0.5},
            {"target": "desk/top", "material_type": "wood", "base_color": [0.55, 0.4, 0.26], "roughness": 0.4},
            {"target": "desk/leg_fl", "material_type": "metal", "base_color": [0.6, 0.6, 0.62], "roughness": 0.3, "metallic": 1.0},
            {"target": "desk/leg_fr", "material_type": "metal", "base_color": [0.6, 0.6, 0.62], "roughness": 0.3, "metallic": 1.0},
            {"target": "desk/leg_bl", "material_type": "metal", "base_color": [0.6, 0.6, 0.62], "roughness": 0.3, "metallic": 1.0},
            {"target": "desk/leg_br", "material_type": "metal", "base_color": [0.6, 0.6, 0.62], "roughness": 0.3, "metallic": 1.0},
            {"target": "chair", "material_type": "plastic", "base_color": [0.2, 0.22, 0.25], "roughness": 0.5},
            {"target": "bookshelf", "material_type": "wood", "base_color": [0.38, 0.26, 0.17], "roughness": 0.6},
            {"target": "poster", "material_type": "paper", "base_color": [0.85, 0.8, 0.7], "roughness": 0.95},
            {"target": "clock/face", "material_type": "metal", "base_color": [0.85, 0.85, 0.87], "roughness": 0.2, "metallic": 1.0},
            {"target": "rug", "material_type": "fabric", "base_color": [0.55, 0.3, 0.25], "roughness": 0.95},
            {"target": "floor_lamp/shade", "material_type": "fabric", "base_color": [0.9, 0.85, 0.7], "roughness": 0.9},
            {"target": "lamp", "material_type": "ceramic", "base_color": [0.9, 0.88, 0.8], "roughness": 0.4},
            {"target": "cup", "material_type": "ceramic", "base_color": [0.95, 0.95, 0.95], "roughness": 0.35},
            {"target": "floor", "material_type": "wood", "base_color": [0.6, 0.45, 0.3], "roughness": 0.45},
            {"target": "wall_n", "material_type": "plaster", "base_color": [0.88, 0.87, 0.83], "roughness": 0.85},
            {"target": "wall_s", "material_type": "plaster", "base_color": [0.88, 0.87, 0.83], "roughness": 0.85},
            {"target": "wall_e", "material_type": "plaster", "base_color": [0.88, 0.87, 0.83], "roughness": 0.85},
            {"target": "wall_w", "material_type": "plaster", "base_color": [0.88, 0.87, 0.83], "roughness": 0.85},
        ],
        "lighting": {
            "sun_azimuth": -1.9,
            "sun_elevation": 0.95,
            "sun_intensity": 3.2,
            "sun_color": [1.0, 0.97, 0.9],
            "window_emitters": True,
            "window_intensity": 45.0,
            "artificial": [
                {"light_kind": "point", "position": [2.0, 2.5, 2.3], "intensity": 120.0,
                 "color": [1.0, 0.92, 0.8]}
            ],
            "ambient": 0.35,
        },
        "critiques": [
            {
                "score": 6.0,
                "issues": [
                    {"kind": "relation_error", "subjects": ["bed"],
                     "note": "bed sits too far from the window wall"},
                    {"kind": "overlap", "subjects": ["chair", "desk"],
                     "note": "chair pushes into the desk"},
                    {"kind": "boundary_violation", "subjects": ["wardrobe"],
                     "note": "wardrobe crowds the corner"},
                    {"kind": "relation_error", "subjects": ["wall_n"],
                     "note": "move the north wall outward"},
                    {"kind": "missing_object", "subjects": ["ghost_shelf"],
                     "note": "a shelf appears missing"},
                    {"kind": "scale_error", "subjects": ["bookshelf"],
                     "note": "bookshelf looks rotated"},
                ],
            },
            {"score": 9.2, "issues": []},
        ],
        "style": {
            "palette": ["warm oak", "cream", "terracotta"],
            "style": "scandinavian",
            "mood": "calm",
            "lighting": "soft morning sun",
        },
    }


def studio_scene() -> dict:
    width, depth = 5.0, 4.0
    objects = [
        _obj("sofa", "sofa", "floor", (1.4, 3.3, 0.0), PI, (2.0, 0.9, 0.8), zone="lounge"),
        _obj("coffee_table", "coffee table", "floor", (1.4, 2.0, 0.0), 0.0, (1.0, 0.6, 0.4), zone="lounge"),
        _obj("tv_stand", "tv stand", "floor", (1.4, 0.4, 0.0), 0.0, (1.6, 0.45, 0.5), zone="lounge"),
        _obj("shelf", "bookshelf", "floor", (4.5, 2.0, 0.0), PI / 2, (1.6, 0.35, 1.9), zone="storage"),
        _obj("tv", "tv", "wall", (1.4, 0.1, 1.1), 0.0, (1.2, 0.08, 0.7),
             anchor={"kind": "against_wall", "target": "wall_s"}),
        _obj("plant", "plant", "floor", (4.5, 3.6, 0.0), 0.0, (0.4, 0.4, 0.6), minor=True, salience=0.85),
        _obj("book", "book", "surface", None, 0.0, (0.22, 0.16, 0.12), parent="coffee_table", salience=0.3),
    ]
    return {
        "scene_id": "studio",
        "extent": (width, depth),
        "door": {"wall": "wall_e", "center": 1.0, "width": 0.9, "height": 2.0},
        "window": {"wall": "wall_w", "center": 2.0, "width": 1.4, "sill": 0.8, "height": 1.3},
        "objects": objects,
        "zones": [
            {"label": "lounge", "polygon": [[0.0, 0.0], [0.6, 0.0], [0.6, 1.0], [0.0, 1.0]],
             "anchors": ["sofa", "coffee table", "tv stand"]},
            {"label": "storage", "polygon": [[0.75, 0.25], [1.0, 0.25], [1.0, 0.75], [0.75, 0.75]],
             "anchors": ["bookshelf"]},
        ],
        "relations": [
            ["coffee_table", "front_of", "sofa"],
            ["sofa", "faces", "tv_stand"],
            ["tv_stand", "front_of", "coffee_table"],
            ["book", "on_top_of", "coffee_table"],
            ["sofa", "left_of", "shelf"],
            ["plant", "behind", "shelf"],
        ],
        "initial_majors": {
            "sofa": ((1.2, 3.0, 0.0), PI - 0.2),
            "coffee_table": ((1.7, 2.2, 0.0), 0.0),
            "tv_stand": ((1.4, 0.7, 0.0), 0.0),
            "shelf": ((4.4, 1.7, 0.0), PI / 2),
        },
        "revised_majors": {
            "sofa": ((1.4, 3.3, 0.0), PI),
            "coffee_table": ((1.4, 2.0, 0.0), 0.0),
            "tv_stand": ((1.4, 0.4, 0.0), 0.0),
            "shelf": ((4.5, 2.0, 0.0), PI / 2),
        },
        "adversarial_edges": [
            {"src": "coffee_table", "relation": "front_of", "dst": "sofa"},
            {"src": "sofa", "relation": "faces", "dst": "tv_stand"},
            {"src": "shelf", "relation": "right_of", "dst": "sofa"},
        ],
        "parts": {
            "sofa": [
                {"name": "base", "primitive": "box", "size": [2.0, 0.9, 0.35], "offset": [0.0, 0.0, 0.175]},
                {"name": "back", "primitive": "box", "size": [2.0, 0.25, 0.45], "offset": [0.0, -0.325, 0.575]},
                {"name": "arm_left", "primitive": "box", "size": [0.22, 0.9, 0.3], "offset": [-0.89, 0.0, 0.5]},
                {"name": "arm_right", "primitive": "box", "size": [0.22, 0.9, 0.3], "offset": [0.89, 0.0, 0.5]},
            ],
            "coffee_table": [
                {"name": "top", "primitive": "box", "size": [1.0, 0.6, 0.04], "offset": [0.0, 0.0, 0.38]},
                {"name": "legs", "primitive": "box", "size": [0.9, 0.5, 0.36], "offset": [0.0, 0.0, 0.18]},
            ],
            "tv_stand": [
                {"name": "body", "primitive": "box", "size": [1.6, 0.45, 0.5], "offset": [0.0, 0.0, 0.25]},
            ],
            "shelf": [
                {"name": "carcass", "primitive": "box", "size": [1.6, 0.35, 1.9], "offset": [0.0, 0.0, 0.95]},
            ],
            "tv": [
                {"name": "panel", "primitive": "plane", "size": [1.2, 0.08, 0.7], "offset": [0.0, 0.0, 0.35]},
            ],
            "plant": [
                {"name": "pot", "primitive": "cylinder", "size": [0.3, 0.3, 0.25], "offset": [0.0, 0.0, 0.125]},
                {"name": "foliage", "primitive": "sphere", "size": [0.4, 0.4, 0.35], "offset": [0.0, 0.0, 0.42]},
            ],
        },
        "retrieval": ["plant", "book"],
        "materials": [
            {"target": "sofa/base", "material_type": "fabric", "base_color": [0.35, 0.4, 0.45], "roughness": 0.9},
            {"target": "sofa/back", "material_type": "fabric", "base_color": [0.35, 0.4, 0.45], "roughness": 0.9},
            {"target": "coffee_table/top", "material_type": "glass", "base_color": [0.85, 0.9, 0.9], "roughness": 0.05},
            {"target": "tv_stand", "material_type": "wood", "base_color": [0.3, 0.22, 0.15], "roughness": 0.5},
            {"target": "shelf", "material_type": "wood", "base_color": [0.45, 0.33, 0.22], "roughness": 0.55},
            {"target": "tv/panel", "material_type": "glass", "base_color": [0.05, 0.05, 0.06], "roughness": 0.1},
            {"target": "floor", "material_type": "stone", "base_color": [0.65, 0.63, 0.6], "roughness": 0.7},
            {"target": "wall_n", "material_type": "plaster", "base_color": [0.9, 0.9, 0.88], "roughness": 0.85},
            {"target": "wall_s", "material_type": "plaster", "base_color": [0.9, 0.9, 0.88], "roughness": 0.85},
            {"target": "wall_e", "material_type": "plaster", "base_color": [0.9, 0.9, 0.88], "roughness": 0.85},
            {"target": "wall_w", "material_type": "plaster", "base_color": [0.9, 0.9, 0.88], "roughness": 0.85},
        ],
        "lighting": {
            "sun_azimuth": 2.6,
            "sun_elevation": 0.7,
            "sun_intensity": 2.8,
            "sun_color": [1.0, 0.98, 0.95],
            "window_emitters": True,
            "window_intensity": 38.0,
            "artificial": [],
            "ambient": 0.3,
        },
        "critiques": [
            {
                "score": 5.5,
                "issues": [
                    {"kind": "relation_error", "subjects": ["sofa"],
                     "note": "sofa drifts off the lounge wall"},
                    {"kind": "relation_error", "subjects": ["tv_stand"],
                     "note": "tv stand should hug the south wall"},
                ],
            },
            {"score": 9.0, "issues": []},
        ],
        "style": {
            "palette": ["slate", "walnut", "off white"],
            "style": "modern",
            "mood": "airy",
            "lighting": "bright daylight",
        },
    }


def office_scene() -> dict:
    width, depth = 3.5, 3.0
    objects = [
        _obj("work_desk", "desk", "floor", (1.75, 2.55, 0.0), PI, (1.4, 0.7, 0.74), zone="work"),
        _obj("task_chair", "chair", "floor", (1.75, 1.7, 0.0), 0.0, (0.5, 0.5, 0.95), zone="work"),
        _obj("cabinet", "cabinet", "floor", (3.1, 0.5, 0.0), PI / 2, (0.8, 0.45, 1.1), zone="storage"),
        _obj("monitor", "monitor", "surface", None, 0.0, (0.55, 0.18, 0.35), parent="work_desk", salience=0.9),
        _obj("chart", "poster", "wall", (0.1, 1.5, 1.3), 0.0, (0.7, 0.02, 0.5),
             anchor={"kind": "against_wall", "target": "wall_w"}),
        _obj("mat", "mat", "floor", (1.75, 1.7, 0.0), 0.0, (1.1, 1.1, 0.01), minor=True, salience=0.6),
    ]
    return {
        "scene_id": "office",
        "extent": (width, depth),
        "door": {"wall": "wall_s", "center": 0.8, "width": 0.85, "height": 2.0},
        "window": {"wall": "wall_n", "center": 1.75, "width": 1.0, "sill": 1.0, "height": 1.1},
        "objects": objects,
        "zones": [
            {"label": "work", "polygon": [[0.15, 0.4], [0.85, 0.4], [0.85, 1.0], [0.15, 1.0]],
             "anchors": ["desk", "chair"]},
            {"label": "storage", "polygon": [[0.7, 0.0], [1.0, 0.0], [1.0, 0.4], [0.7, 0.4]],
             "anchors": ["cabinet"]},
        ],
        "relations": [
            ["task_chair", "front_of", "work_desk"],
            ["task_chair", "faces", "work_desk"],
            ["monitor", "on_top_of", "work_desk"],
            ["work_desk", "left_of", "cabinet"],
            ["mat", "under", "task_chair"],
        ],
        "initial_majors": {
            "work_desk": ((1.6, 2.4, 0.0), PI),
            "task_chair": ((1.9, 1.9, 0.0), 0.1),
            "cabinet": ((3.2, 0.8, 0.0), PI / 2),
        },
        "revised_majors": {
            "work_desk": ((1.75, 2.55, 0.0), PI),
            "task_chair": ((1.75, 1.7, 0.0), 0.0),
            "cabinet": ((3.1, 0.5, 0.0), PI / 2),
        },
        "adversarial_edges": [
            {"src": "task_chair", "relation": "front_of", "dst": "work_desk"},
            {"src": "work_desk", "relation": "left_of", "dst": "cabinet"},
        ],
        "parts": {
            "work_desk": [
                {"name": "top", "primitive": "box", "size": [1.4, 0.7, 0.04], "offset": [0.0, 0.0, 0.72]},
                {"name": "panel_left", "primitive": "box", "size": [0.04, 0.65, 0.7], "offset": [-0.65, 0.0, 0.35]},
                {"name": "panel_right", "primitive": "box", "size": [0.04, 0.65, 0.7], "offset": [0.65, 0.0, 0.35]},
            ],
            "task_chair": [
                {"name": "seat", "primitive": "box", "size": [0.5, 0.5, 0.09], "offset": [0.0, 0.0, 0.5]},
                {"name": "back", "primitive": "box", "size": [0.48, 0.07, 0.45], "offset": [0.0, -0.21, 0.75]},
                {"name": "column", "primitive": "cylinder", "size": [0.06, 0.06, 0.45], "offset": [0.0, 0.0, 0.225]},
            ],
            "cabinet": [
                {"name": "body", "primitive": "box", "size": [0.8, 0.45, 1.1], "offset": [0.0, 0.0, 0.55]},
            ],
            "monitor": [
                {"name": "screen", "primitive": "plane", "size": [0.55, 0.05, 0.33], "offset": [0.0, 0.0, 0.21]},
                {"name": "foot", "primitive": "box", "size": [0.2, 0.18, 0.04], "offset": [0.0, 0.0, 0.02]},
            ],
            "chart": [
                {"name": "sheet", "primitive": "plane", "size": [0.7, 0.02, 0.5], "offset": [0.0, 0.0, 0.25]},
            ],
            "mat": [
                {"name": "sheet", "primitive": "plane", "size": [1.1, 1.1, 0.01], "offset": [0.0, 0.0, 0.005]},
            ],
        },
        "retrieval": [],
        "materials": [
            {"target": "work_desk/top", "material_type": "wood", "base_color": [0.7, 0.55, 0.4], "roughness": 0.4},
            {"target": "task_chair", "material_type": "fabric", "base_color": [0.15, 0.15, 0.18], "roughness": 0.85},
            {"target": "cabinet", "material_type": "metal", "base_color": [0.55, 0.57, 0.6], "roughness": 0.35, "metallic": 1.0},
            {"target": "monitor/screen", "material_type": "glass", "base_color": [0.04, 0.04, 0.05], "roughness": 0.08},
            {"target": "chart", "material_type": "paper", "base_color": [0.92, 0.92, 0.88], "roughness": 0.95},
            {"target": "mat", "material_type": "plastic", "base_color": [0.3, 0.3, 0.32], "roughness": 0.6},
            {"target": "floor", "material_type": "stone", "base_color": [0.62, 0.6, 0.58], "roughness": 0.75},
            {"target": "wall_n", "material_type": "plaster", "base_color": [0.87, 0.89, 0.9], "roughness": 0.85},
            {"target": "wall_s", "material_type": "plaster", "base_color": [0.87, 0.89, 0.9], "roughness": 0.85},
            {"target": "wall_e", "material_type": "plaster", "base_color": [0.87, 0.89, 0.9], "roughness": 0.85},
            {"target": "wall_w", "material_type": "plaster", "base_color": [0.87, 0.89, 0.9], "roughness": 0.85},
        ],
        "lighting": {
            "sun_azimuth": -0.8,
            "sun_elevation": 1.1,
            "sun_intensity": 3.0,
            "sun_color": [1.0, 1.0, 0.97],
            "window_emitters": True,
            "window_intensity": 30.0,
            "artificial": [
                {"light_kind": "area", "position": [1.75, 1.5, 2.4], "intensity": 90.0,
                 "color": [1.0, 1.0, 1.0]}
            ],
            "ambient": 0.32,
        },
        "critiques": [
            {
                "score": 7.0,
                "issues": [
                    {"kind": "relation_error", "subjects": ["task_chair"],
                     "note": "chair should face the desk squarely"},
                ],
            },
            {"score": 9.5, "issues": []},
        ],
        "style": {
            "palette": ["graphite", "birch", "white"],
            "style": "contemporary office",
            "mood": "focused",
            "lighting": "cool daylight",
        },
    }


# ---------------------------------------------------------------------------
# Emission of fixture files
# ---------------------------------------------------------------------------


def _shell_for(scene):
    width, depth = scene["extent"]
    door = scene["door"]
    window = scene["window"]
    return make_shell(
        width,
        depth,
        cutouts=[
            Cutout(kind="door", wall=door["wall"], center=door["center"],
                   width=door["width"], bottom=0.0, height=door["height"]),
            Cutout(kind="window", wall=window["wall"], center=window["center"],
                   width=window["width"], bottom=window["sill"], height=window["height"]),
        ],
    )


def _gt_program(scene) -> SceneProgram:
    """Ground-truth placement of every described object, as proxies."""
    shell = _shell_for(scene)
    statements = []
    surface_center = {}
    for row in scene["objects"]:
        if row["placement_type"] == "surface":
            continue
        surface_center[row["id"]] = row["_pos"]
    for row in scene["objects"]:
        size = row["_size"]
        if row["placement_type"] == "wall":
            rough = Proxy(
                id=row["id"], category=row["category"],
                pose=Pose(position=row["_pos"], yaw=row["_yaw"]), size=size,
                placement_type="wall",
            )
            statements.append(snap_to_wall(rough, shell))
        elif row["placement_type"] == "surface":
            parent = next(o for o in scene["objects"] if o["id"] == row["parent"])
            px, py, _ = parent["_pos"]
            top = parent["_size"][2]
            statements.append(
                Proxy(
                    id=row["id"], category=row["category"],
                    pose=Pose(position=(px, py, top), yaw=parent["_yaw"]), size=size,
                    parent=row["parent"], placement_type="surface",
                )
            )
        else:
            statements.append(
                Proxy(
                    id=row["id"], category=row["category"],
                    pose=Pose(position=row["_pos"], yaw=row["_yaw"]), size=size,
                    parent=row.get("parent"), placement_type=row["placement_type"],
                )
            )
    return SceneProgram(shell=shell, statements=statements)


def _description_payload(scene) -> dict:
    width, depth = scene["extent"]
    door = scene["door"]
    window = scene["window"]

    def _wall_segment(wall_id):
        segs = {
            "wall_s": [[0.0, 0.0], [width, 0.0]],
            "wall_e": [[width, 0.0], [width, depth]],
            "wall_n": [[width, depth], [0.0, depth]],
            "wall_w": [[0.0, depth], [0.0, 0.0]],
        }
        return segs[wall_id]

    def _cut_segment(spec):
        seg = _wall_segment(spec["wall"])
        (x1, y1), (x2, y2) = seg
        length = math.hypot(x2 - x1, y2 - y1)
        t0 = (spec["center"] - spec["width"] / 2) / length
        t1 = (spec["center"] + spec["width"] / 2) / length
        return [
            [x1 + (x2 - x1) * t0, y1 + (y2 - y1) * t0],
            [x1 + (x2 - x1) * t1, y1 + (y2 - y1) * t1],
        ]

    architecture = [
        {"id": wall_id, "kind": "wall", "geometry": {"segment": _wall_segment(wall_id)},
         "metadata": {}}
        for wall_id in ("wall_s", "wall_e", "wall_n", "wall_w")
    ]
    architecture.append(
        {"id": "door_main", "kind": "door", "geometry": {"segment": _cut_segment(door)},
         "metadata": {"height": str(door["height"])}}
    )
    architecture.append(
        {"id": "window_main", "kind": "window", "geometry": {"segment": _cut_segment(window)},
         "metadata": {"sill": str(window["sill"]), "height": str(window["height"])}}
    )
    objects = []
    for row in scene["objects"]:
        objects.append(
            {
                "id": row["id"],
                "category": row["category"],
                "placement_type": row["placement_type"],
                "parent": row["parent"],
                "size_hint": list(row["_size"]),
                "zone": row["zone"],
                "minor": row["minor"],
                "salience": row["salience"],
                "anchor": row["anchor"],
            }
        )
    return {
        "objects": objects,
        "zones": [{"label": z["label"], "polygon": z["polygon"]} for z in scene["zones"]],
        "architecture": architecture,
        "image_size": [512, 512],
        "room_extent": [width, depth],
    }


def _layout_payload(scene, majors_key) -> dict:
    rows = []
    for oid, (pos, yaw) in scene[majors_key].items():
        row = next(o for o in scene["objects"] if o["id"] == oid)
        rows.append(
            {
                "id": oid,
                "category": row["category"],
                "position": list(pos),
                "yaw": yaw,
                "size": list(row["_size"]),
                "placement_type": "floor",
                "parent": None,
            }
        )
    return {"objects": rows}


def _aux_layout_payload(scene) -> dict:
    rows = []
    for row in scene["objects"]:
        if row["placement_type"] == "wall" or (row["minor"] and not row["placement_type"] == "surface"):
            rows.append(
                {
                    "id": row["id"],
                    "category": row["category"],
                    "position": list(row["_pos"]),
                    "yaw": row["_yaw"],
                    "size": list(row["_size"]),
                    "placement_type": row["placement_type"],
                    "parent": None,
                }
            )
    return {"objects": rows}


def _revise_payload(scene) -> list:
    edits = []
    for oid, (pos, yaw) in scene["revised_majors"].items():
        edits.append({"op": "move", "id": oid, "position": list(pos)})
        edits.append({"op": "rotate", "id": oid, "yaw": yaw})
    return [{"edits": edits}]


def _profiles_payload(scene) -> dict:
    placed = [
        row for row in scene["objects"] if row["placement_type"] != "surface"
    ]
    profiles = []
    for row in placed:
        profiles.append(
            {
                "id": row["id"],
                "color": "neutral tone",
                "material": "mixed",
                "function": row["category"],
                "structure": "simple volume",
                "style": scene["style"]["style"],
            }
        )
    return {"profiles": profiles, "room_style": scene["style"]}


def build_scene(scene: dict, out_root: Path) -> None:
    scene_id = scene["scene_id"]
    providers_dir = out_root / "providers" / scene_id
    providers_dir.mkdir(parents=True, exist_ok=True)

    write_json(providers_dir / "stage1.json", _description_payload(scene))
    write_json(providers_dir / "stage2.json", {
        "edges": scene["adversarial_edges"],
        "attributes": {},
        "geometry_hints": {},
    })
    write_json(providers_dir / "stage3_generate.json", _layout_payload(scene, "initial_majors"))
    write_json(providers_dir / "stage3_critique.json", scene["critiques"])
    write_json(providers_dir / "stage3_revise.json", _revise_payload(scene))
    write_json(providers_dir / "stage4.json", _aux_layout_payload(scene))
    write_json(providers_dir / "stage5.json", _profiles_payload(scene))
    write_json(providers_dir / "stage6.json", {
        "parts": scene["parts"],
        "retrieval": scene["retrieval"],
    })
    write_json(providers_dir / "stage8.json", {"assignments": scene["materials"]})
    write_json(providers_dir / "stage10.json", scene["lighting"])

    gt = _gt_program(scene)
    annotation = metrics_mod.Annotation(
        gt_program=gt,
        relations=[tuple(r) for r in scene["relations"]],
        zones=[
            metrics_mod.AnnotatedZone(
                label=z["label"],
                polygon=tuple(tuple(p) for p in z["polygon"]),
                anchors=tuple(z["anchors"]),
            )
            for z in scene["zones"]
        ],
        category_aliases={"side table": "nightstand", "couch": "sofa"},
        yaw_symmetry={"rug": "pi", "mat": "half_pi", "cup": "half_pi"},
    )
    gt_dir = out_root / "gt"
    gt_dir.mkdir(parents=True, exist_ok=True)
    annotation.save(gt_dir / f"{scene_id}.json")

    images_dir = out_root / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    render_preview(gt, px_per_m=60).save(images_dir / f"{scene_id}.png")


def build_metrics_pair(out_root: Path) -> None:
    """Small hand-checkable evaluation pair.

    Expected values, derived on paper: recall 4/5; functional accuracy 1/2
    (the work zone misses its plant anchor); self-overlap 0.25/3.79 (the
    extra chair sits fully on the rug); layout IoU 3.4/3.8 (axis-aligned
    rectangle arithmetic); spatial relations 1/3; rotation 3/4 (the square
    rug is turned 90 degrees); support 0/1 (the lamp ended up on the
    floor).
    """
    shell = make_shell(4.0, 4.0)

    def p(oid, category, pos, size, yaw=0.0, parent=None, placement="floor"):
        return Proxy(
            id=oid, category=category, pose=Pose(position=pos, yaw=yaw), size=size,
            parent=parent, placement_type=placement,
        )

    gt = SceneProgram(
        shell=shell,
        statements=[
            p("bed", "bed", (1.0, 2.0, 0.0), (1.0, 2.0, 0.55)),
            p("desk", "desk", (3.0, 1.0, 0.0), (1.0, 0.5, 0.75)),
            p("lamp", "lamp", (3.0, 1.0, 0.75), (0.2, 0.2, 0.3),
              parent="desk", placement="surface"),
            p("plant", "plant", (0.5, 3.5, 0.0), (0.4, 0.4, 0.6)),
            p("rug", "rug", (2.0, 3.0, 0.0), (1.0, 1.0, 0.02)),
        ],
    )
    pred = SceneProgram(
        shell=shell,
        statements=[
            p("bed", "bed", (1.0, 2.0, 0.0), (1.0, 2.0, 0.55)),
            p("desk", "desk", (3.2, 1.0, 0.0), (1.0, 0.5, 0.75)),
            p("lamp", "lamp", (0.5, 0.5, 0.0), (0.2, 0.2, 0.3)),
            p("chair", "chair", (2.0, 3.0, 0.0), (0.5, 0.5, 0.9)),
            p("rug", "rug", (2.0, 3.0, 0.0), (1.0, 1.0, 0.02), yaw=PI / 2),
        ],
    )
    annotation = metrics_mod.Annotation(
        gt_program=gt,
        relations=[
            ("bed", "left_of", "desk"),
            ("lamp", "on_top_of", "desk"),
            ("plant", "behind", "desk"),
        ],
        zones=[
            metrics_mod.AnnotatedZone(
                "sleep", ((0.0, 0.0), (0.5, 0.0), (0.5, 1.0), (0.0, 1.0)), ("bed",)
            ),
            metrics_mod.AnnotatedZone(
                "work", ((0.5, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 0.5)),
                ("desk", "plant"),
            ),
        ],
    )
    pair_dir = out_root / "metrics_pair"
    pair_dir.mkdir(parents=True, exist_ok=True)
    pred.save(pair_dir / "pred.json")
    annotation.save(pair_dir / "gt.json")
    report = metrics_mod.evaluate(pred, annotation)
    golden_dir = out_root / "golden"
    golden_dir.mkdir(parents=True, exist_ok=True)
    report.save(golden_dir / "metrics_pair.json")


def build_sample_emitted_script(out_root: Path) -> None:
    """Small shim-mode script exercising the Blender runtime contract."""
    from car.emit import EmitOptions, emit_blender_script
    from car.program import (
        LightingPlan,
        MaterialAssign,
        MaterialSpec,
        Part,
        TextureBind,
        render_setup,
        replace_with_parts,
    )

    shell = make_shell(4.0, 4.0, cutouts=[
        Cutout(kind="door", wall="wall_s", center=2.0, width=0.9, bottom=0.0, height=2.0),
        Cutout(kind="window", wall="wall_n", center=2.0, width=1.0, bottom=0.9, height=1.2),
    ])
    program = SceneProgram(shell=shell, statements=[
        Proxy(id="bed", category="bed", pose=Pose((1.0, 2.0, 0.0), 0.0),
              size=(1.6, 2.0, 0.5)),
        Proxy(id="desk", category="desk", pose=Pose((3.0, 1.0, 0.0), PI / 2),
              size=(1.2, 0.6, 0.75)),
    ])
    program, _ = replace_with_parts(program, {
        "desk": [
            Part("top", "box", (1.2, 0.6, 0.05), (0.0, 0.0, 0.725)),
            Part("leg_a", "cylinder", (0.05, 0.05, 0.7), (0.55, 0.25, 0.35)),
            Part("leg_b", "cylinder", (0.05, 0.05, 0.7), (-0.55, -0.25, 0.35)),
        ]
    })
    from car.program import apply_materials, apply_textures

    program = apply_materials(program, [
        MaterialAssign("bed", MaterialSpec("fabric", (0.8, 0.78, 0.74), 0.9)),
        MaterialAssign("desk/top", MaterialSpec("wood", (0.55, 0.4, 0.26), 0.4)),
        MaterialAssign("floor", MaterialSpec("stone", (0.6, 0.6, 0.58), 0.7)),
    ])
    program = apply_textures(program, [
        TextureBind("floor", "builtin:checker", uv={"mode": "tile", "scale": [4.0, 4.0]}),
    ])
    program = render_setup(program, LightingPlan())
    emitted_dir = out_root / "emitted"
    emitted_dir.mkdir(parents=True, exist_ok=True)
    emit_blender_script(
        program,
        EmitOptions(
            shim_mode="shim_import",
            output_path=str(emitted_dir / "sample_shim.blend.py"),
        ),
    )
    emit_blender_script(
        program,
        EmitOptions(
            shim_mode="self_contained",
            output_path=str(emitted_dir / "sample_self_contained.blend.py"),
        ),
    )
    program.save(emitted_dir / "sample_program.json")


def build_reference_goldens(out_root: Path) -> None:
    """Freeze reference-run outputs: per-stage input manifest and the final
    bedroom program. Pins long-term pipeline behavior; the determinism
    acceptance compares fresh runs against each other, these compare
    against history."""
    import shutil
    import tempfile

    from car.pipeline import Pipeline, PipelineConfig

    run_root = Path(tempfile.mkdtemp(prefix="car_golden_"))
    config = PipelineConfig(
        provider={"kind": "scripted", "fixtures_root": str(out_root / "providers")},
        run_root=str(run_root),
        asset_index=str(out_root / "assets" / "index.json"),
    )
    state = Pipeline(config).run_all(out_root / "images" / "bedroom.png", "bedroom")
    if not state.completed:
        raise RuntimeError("golden reference run did not complete")
    golden_dir = out_root / "golden"
    golden_dir.mkdir(parents=True, exist_ok=True)
    write_json(
        golden_dir / "bedroom_view_manifest.json",
        {s.stage: s.inputs for s in state.stages},
    )
    shutil.copyfile(
        run_root / "bedroom" / "out" / "final_program.json",
        golden_dir / "bedroom_final_program.json",
    )
    shutil.rmtree(run_root)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(REPO / "fixtures"))
    args = parser.parse_args()
    out_root = Path(args.out)
    build_assets(out_root / "assets")
    for scene in (bedroom_scene(), studio_scene(), office_scene()):
        build_scene(scene, out_root)
        print(f"built fixtures for {scene['scene_id']}")
    build_metrics_pair(out_root)
    build_sample_emitted_script(out_root)
    build_reference_goldens(out_root)
    print(f"fixture suite written to {out_root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
