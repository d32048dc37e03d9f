"""Published JSON schemas for every model-facing stage output.

Provider payloads are validated against exactly one of these before the
pipeline consumes them; a scripted fixture that drifts from its schema
fails loudly with the violated field named.
"""

from __future__ import annotations

from typing import Dict

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_VEC2 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_UNIT = {"type": "number", "minimum": 0.0, "maximum": 1.0}
_COLOR = {"type": "array", "items": _UNIT, "minItems": 3, "maxItems": 3}

PLACEMENT_ENUM = {"enum": ["floor", "wall", "surface", "ceiling"]}
PRIMITIVE_ENUM = {"enum": ["box", "cylinder", "sphere", "cone", "plane", "torus"]}
ISSUE_KINDS = [
    "missing_object",
    "overlap",
    "boundary_violation",
    "relation_error",
    "extra_object",
    "scale_error",
]

DESCRIPTION_SCHEMA = {
    "$id": "car/description",
    "type": "object",
    "required": ["objects", "room_extent"],
    "properties": {
        "objects": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "category", "placement_type"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "category": {"type": "string", "minLength": 1},
                    "placement_type": PLACEMENT_ENUM,
                    "parent": {"type": ["string", "null"]},
                    "size_hint": {**_VEC3, "type": ["array", "null"]},
                    "zone": {"type": ["string", "null"]},
                    "minor": {"type": "boolean"},
                    "salience": _UNIT,
                    "anchor": {
                        "type": ["object", "null"],
                        "required": ["kind", "target"],
                        "properties": {
                            "kind": {"enum": ["against_wall", "in_corner"]},
                            "target": {"type": "string"},
                        },
                    },
                },
            },
        },
        "zones": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "polygon"],
                "properties": {
                    "label": {"type": "string"},
                    "polygon": {"type": "array", "items": _VEC2, "minItems": 3},
                },
            },
        },
        "architecture": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "geometry"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": ["wall", "door", "window", "opening", "built-in"]},
                    "geometry": {"type": "object"},
                    "metadata": {"type": "object"},
                },
            },
        },
        "image_size": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "room_extent": _VEC2,
    },
}

GRAPH_COMPLETION_SCHEMA = {
    "$id": "car/graph_completion",
    "type": "object",
    "required": ["edges"],
    "properties": {
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["src", "relation", "dst"],
                "properties": {
                    "src": {"type": "string"},
                    "dst": {"type": "string"},
                    "relation": {"type": "string"},
                },
            },
        },
        "attributes": {
            "type": "object",
            "additionalProperties": {"type": "object"},
        },
        "geometry_hints": {
            "type": "object",
            "additionalProperties": {"type": "string"},
        },
    },
}

LAYOUT_SCHEMA = {
    "$id": "car/layout",
    "type": "object",
    "required": ["objects"],
    "properties": {
        "objects": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "category", "position", "size"],
                "properties": {
                    "id": {"type": "string"},
                    "category": {"type": "string"},
                    "position": _VEC3,
                    "yaw": {"type": "number"},
                    "size": _VEC3,
                    "placement_type": PLACEMENT_ENUM,
                    "parent": {"type": ["string", "null"]},
                },
            },
        }
    },
}

CRITIQUE_SCHEMA = {
    "$id": "car/critique",
    "type": "object",
    "required": ["score", "issues"],
    "properties": {
        "score": {"type": "number", "minimum": 0.0, "maximum": 10.0},
        "issues": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "subjects"],
                "properties": {
                    "kind": {"enum": ISSUE_KINDS},
                    "subjects": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                    "note": {"type": "string"},
                },
            },
        },
    },
}

EDITS_SCHEMA = {
    "$id": "car/edits",
    "type": "object",
    "required": ["edits"],
    "properties": {
        "edits": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["op", "id"],
                "properties": {
                    "op": {"enum": ["move", "rotate", "resize", "add", "remove"]},
                    "id": {"type": "string"},
                    "position": _VEC3,
                    "yaw": {"type": "number"},
                    "size": _VEC3,
                    "category": {"type": "string"},
                    "placement_type": PLACEMENT_ENUM,
                    "parent": {"type": ["string", "null"]},
                },
            },
        }
    },
}

PROFILE_SET_SCHEMA = {
    "$id": "car/profile_set",
    "type": "object",
    "required": ["profiles", "room_style"],
    "properties": {
        "profiles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "color", "material", "function", "structure", "style"],
                "properties": {
                    "id": {"type": "string"},
                    "color": {"type": "string"},
                    "material": {"type": "string"},
                    "function": {"type": "string"},
                    "structure": {"type": "string"},
                    "style": {"type": "string"},
                },
            },
        },
        "room_style": {
            "type": "object",
            "required": ["palette", "style", "mood", "lighting"],
            "properties": {
                "palette": {"type": "array", "items": {"type": "string"}},
                "style": {"type": "string"},
                "mood": {"type": "string"},
                "lighting": {"type": "string"},
            },
        },
    },
}

PARTS_SCHEMA = {
    "$id": "car/parts",
    "type": "object",
    "required": ["parts"],
    "properties": {
        "parts": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["name", "primitive", "size", "offset"],
                    "properties": {
                        "name": {"type": "string"},
                        "primitive": PRIMITIVE_ENUM,
                        "size": _VEC3,
                        "offset": _VEC3,
                        "rotation": _VEC3,
                    },
                },
            },
        },
        "retrieval": {"type": "array", "items": {"type": "string"}},
    },
}

MATERIALS_SCHEMA = {
    "$id": "car/materials",
    "type": "object",
    "required": ["assignments"],
    "properties": {
        "assignments": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["target", "material_type", "base_color"],
                "properties": {
                    "target": {"type": "string"},
                    "material_type": {"type": "string"},
                    "base_color": _COLOR,
                    "roughness": _UNIT,
                    "metallic": _UNIT,
                    "specular": {"type": "number", "minimum": 0.0},
                },
            },
        }
    },
}

LIGHTING_SCHEMA = {
    "$id": "car/lighting",
    "type": "object",
    "properties": {
        "sun_azimuth": {"type": "number"},
        "sun_elevation": {"type": "number"},
        "sun_intensity": {"type": "number", "minimum": 0.0},
        "sun_color": _COLOR,
        "window_emitters": {"type": "boolean"},
        "window_intensity": {"type": "number", "minimum": 0.0},
        "artificial": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["light_kind", "position", "intensity"],
                "properties": {
                    "light_kind": {"enum": ["sun", "point", "area", "spot"]},
                    "position": _VEC3,
                    "intensity": {"type": "number", "minimum": 0.0},
                    "color": _COLOR,
                },
            },
        },
        "ambient": {"type": "number", "minimum": 0.0},
    },
}


def stage_schemas() -> Dict[str, dict]:
    """Registry of response schemas keyed by schema id."""
    return {
        "description": DESCRIPTION_SCHEMA,
        "graph_completion": GRAPH_COMPLETION_SCHEMA,
        "layout": LAYOUT_SCHEMA,
        "critique": CRITIQUE_SCHEMA,
        "edits": EDITS_SCHEMA,
        "profile_set": PROFILE_SET_SCHEMA,
        "parts": PARTS_SCHEMA,
        "materials": MATERIALS_SCHEMA,
        "lighting": LIGHTING_SCHEMA,
    }


# Which schema each provider-facing stage call must satisfy.
STAGE_SCHEMA_IDS = {
    "1": "description",
    "2": "graph_completion",
    "3_generate": "layout",
    "3_critique": "critique",
    "3_revise": "edits",
    "4": "layout",
    "5": "profile_set",
    "6": "parts",
    "8": "materials",
    "10": "lighting",
}
