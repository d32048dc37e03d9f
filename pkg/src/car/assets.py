"""Asset library retrieval for small, visually distinctive objects.

Lexical match scoring (label overlap, description cosine, log-size
compatibility), deterministic argmax selection, and substitution of a
placeholder proxy by a scaled library mesh.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from .jsonio import read_json
from .program import AssetInstance, LinkError, SceneProgram, Vec3

DEFAULT_WEIGHTS = (0.4, 0.2, 0.4)  # label, description, size
SCORE_FLOOR = 0.3
MAX_ASPECT_DISTORTION = 1.5

# Categories routed through retrieval even without an explicit provider flag.
RETRIEVAL_CATEGORIES = frozenset(
    {"vase", "plant", "cup", "mug", "bottle", "bowl", "book", "clock", "sculpture"}
)


class AssetLibraryError(ValueError):
    pass


@dataclass(frozen=True)
class AssetRecord:
    asset_id: str
    label: str
    description: str
    size: Vec3  # canonical mesh size, meters
    tags: Tuple[str, ...]
    mesh_ref: str
    support_footprint: Tuple[float, float]

    @classmethod
    def from_dict(cls, d: dict) -> "AssetRecord":
        return cls(
            asset_id=d["asset_id"],
            label=d["label"],
            description=d.get("description", ""),
            size=tuple(float(v) for v in d["size"]),
            tags=tuple(d.get("tags", [])),
            mesh_ref=d["mesh_ref"],
            support_footprint=tuple(float(v) for v in d.get("support_footprint", d["size"][:2])),
        )


@dataclass(frozen=True)
class MatchQuery:
    label: str
    description: str
    placeholder_size: Vec3

    def __post_init__(self):
        object.__setattr__(
            self, "placeholder_size", tuple(float(v) for v in self.placeholder_size)
        )
        if min(self.placeholder_size) <= 0:
            raise ValueError("placeholder size must be strictly positive")


@dataclass
class AssetLibrary:
    root: Path
    records: List[AssetRecord]

    @classmethod
    def load(cls, index_path) -> "AssetLibrary":
        index_path = Path(index_path)
        data = read_json(index_path)
        records = [AssetRecord.from_dict(r) for r in data["assets"]]
        root = index_path.parent
        for record in records:
            if min(record.size) <= 0:
                raise AssetLibraryError(f"asset {record.asset_id!r} has non-positive size")
            if not (root / record.mesh_ref).exists():
                raise AssetLibraryError(
                    f"asset {record.asset_id!r} mesh {record.mesh_ref!r} not found"
                )
        return cls(root=root, records=records)


def _tokens(text: str) -> frozenset:
    return frozenset(t for t in re.split(r"[^a-z0-9]+", text.lower()) if t)


def _jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def _set_cosine(a: frozenset, b: frozenset) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))


def match_score(
    record: AssetRecord,
    query: MatchQuery,
    weights: Tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> float:
    """Blend of label overlap, description cosine, and size compatibility.

    Size compatibility is exp(-sum |log size ratio|) per axis: 1 for equal
    sizes, decaying symmetrically for scaling in either direction.
    """
    w_label, w_desc, w_size = weights
    label_sim = _jaccard(_tokens(record.label), _tokens(query.label))
    desc_sim = _set_cosine(_tokens(record.description), _tokens(query.description))
    log_ratio = sum(
        abs(math.log(record.size[i] / query.placeholder_size[i])) for i in range(3)
    )
    size_compat = math.exp(-log_ratio)
    return w_label * label_sim + w_desc * desc_sim + w_size * size_compat


def select_asset(
    library: AssetLibrary,
    query: MatchQuery,
    floor: float = SCORE_FLOOR,
    weights: Tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> Optional[AssetRecord]:
    """Highest-scoring record at or above the floor; ties go to smaller id."""
    if not library.records:
        return None
    scored = sorted(
        library.records,
        key=lambda r: (-match_score(r, query, weights), r.asset_id),
    )
    best = scored[0]
    if match_score(best, query, weights) < floor:
        return None
    return best


def _clamp_aspect(scale: Vec3, limit: float = MAX_ASPECT_DISTORTION) -> Vec3:
    """Pull scale components toward their geometric mean until the
    max/min ratio is within the distortion limit."""
    if max(scale) / min(scale) <= limit:
        return scale
    mean = (scale[0] * scale[1] * scale[2]) ** (1.0 / 3.0)
    lo, hi = mean / math.sqrt(limit), mean * math.sqrt(limit)
    return tuple(min(hi, max(lo, s)) for s in scale)


def substitute_placeholder(
    program: SceneProgram, placeholder_id: str, asset: AssetRecord
) -> SceneProgram:
    """Replace a placeholder proxy with a scaled asset instance in place.

    The instance keeps the placeholder's pose (so footprint center, support
    relationship, and seat height survive) and scales the canonical mesh to
    the placeholder size, with per-axis distortion clamped.
    """
    target = program.find_object(placeholder_id)
    if target is None or target.kind != "proxy":
        raise LinkError(f"placeholder {placeholder_id!r} not found as a proxy")
    scale = tuple(target.size[i] / asset.size[i] for i in range(3))
    scale = _clamp_aspect(scale)
    instance = AssetInstance(
        id=target.id,
        category=target.category,
        pose=target.pose,
        mesh_ref=asset.mesh_ref,
        scale=scale,
        placeholder_size=target.size,
        parent=target.parent,
        placement_type=target.placement_type,
    )
    statements = [
        instance if (s.kind == "proxy" and s.id == placeholder_id) else s
        for s in program.statements
    ]
    return SceneProgram(shell=program.shell, statements=statements, version=program.version)
