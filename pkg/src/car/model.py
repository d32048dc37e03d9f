"""Structured scene state built by the first two pipeline stages.

A scene description lists the objects, functional zones, and architectural
elements read off the input image. From it we derive a deterministic
skeleton (architecture nodes, layout-defining major nodes, hierarchy edges,
and a sidecar of deferred minor objects), then complete it into a scene
graph by filtering model-proposed relations and closing the edge set under
inversion and architectural anchors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .jsonio import read_json, write_json

PLACEMENT_TYPES = ("floor", "wall", "surface", "ceiling")
ARCH_KINDS = ("wall", "door", "window", "opening", "built-in")

RELATIONS = (
    "parent_of",
    "child_of",
    "left_of",
    "right_of",
    "front_of",
    "behind",
    "adjacent_to",
    "on_top_of",
    "under",
    "faces",
    "against_wall",
    "in_corner",
)

# faces / against_wall / in_corner are directional anchors with no inverse.
INVERSE_RELATIONS = {
    "parent_of": "child_of",
    "child_of": "parent_of",
    "left_of": "right_of",
    "right_of": "left_of",
    "front_of": "behind",
    "behind": "front_of",
    "on_top_of": "under",
    "under": "on_top_of",
    "adjacent_to": "adjacent_to",
}

DEFAULT_SALIENCE_THRESHOLD = 0.5


class StructuralError(ValueError):
    """Scene state violates a structural invariant (cycle, dangling ref)."""


@dataclass(frozen=True)
class Anchor:
    """Architectural anchor noted in the description (wall or corner)."""

    kind: str  # "against_wall" | "in_corner"
    target: str  # arch element id

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target}

    @classmethod
    def from_dict(cls, d: dict) -> "Anchor":
        return cls(kind=d["kind"], target=d["target"])


@dataclass(frozen=True)
class DescribedObject:
    id: str
    category: str
    placement_type: str
    parent: Optional[str] = None
    size_hint: Optional[Tuple[float, float, float]] = None
    zone: Optional[str] = None
    minor: bool = False
    salience: float = 1.0
    anchor: Optional[Anchor] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "placement_type": self.placement_type,
            "parent": self.parent,
            "size_hint": list(self.size_hint) if self.size_hint else None,
            "zone": self.zone,
            "minor": self.minor,
            "salience": self.salience,
            "anchor": self.anchor.to_dict() if self.anchor else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DescribedObject":
        return cls(
            id=d["id"],
            category=d["category"],
            placement_type=d["placement_type"],
            parent=d.get("parent"),
            size_hint=tuple(d["size_hint"]) if d.get("size_hint") else None,
            zone=d.get("zone"),
            minor=bool(d.get("minor", False)),
            salience=float(d.get("salience", 1.0)),
            anchor=Anchor.from_dict(d["anchor"]) if d.get("anchor") else None,
        )


@dataclass(frozen=True)
class FunctionalZone:
    label: str
    polygon: Tuple[Tuple[float, float], ...]  # image-normalized [0,1]^2

    def to_dict(self) -> dict:
        return {"label": self.label, "polygon": [list(p) for p in self.polygon]}

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionalZone":
        return cls(label=d["label"], polygon=tuple(tuple(p) for p in d["polygon"]))


@dataclass(frozen=True)
class ArchElement:
    id: str
    kind: str
    geometry: dict  # {"segment": [[x,y],[x,y]]} or {"rect": [x,y,w,h]} in room coords
    metadata: Tuple[Tuple[str, str], ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "geometry": self.geometry,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchElement":
        return cls(
            id=d["id"],
            kind=d["kind"],
            geometry=d["geometry"],
            metadata=tuple(sorted(d.get("metadata", {}).items())),
        )


@dataclass
class SceneDescription:
    objects: List[DescribedObject]
    zones: List[FunctionalZone] = field(default_factory=list)
    architecture: List[ArchElement] = field(default_factory=list)
    image_size: Tuple[int, int] = (1024, 1024)
    room_extent: Tuple[float, float] = (4.0, 4.0)

    def object_map(self) -> Dict[str, DescribedObject]:
        return {o.id: o for o in self.objects}

    def validate(self) -> None:
        if self.room_extent[0] <= 0 or self.room_extent[1] <= 0:
            raise StructuralError("room_extent must be strictly positive")
        seen = set()
        for obj in self.objects:
            if obj.id in seen:
                raise StructuralError(f"duplicate object id {obj.id!r}")
            seen.add(obj.id)
            if obj.placement_type not in PLACEMENT_TYPES:
                raise StructuralError(
                    f"object {obj.id!r} has unknown placement_type {obj.placement_type!r}"
                )
            if obj.placement_type == "surface" and obj.parent is None:
                raise StructuralError(f"surface object {obj.id!r} has no parent")
        ids = self.object_map()
        for obj in self.objects:
            if obj.parent is not None and obj.parent not in ids:
                raise StructuralError(
                    f"object {obj.id!r} names missing parent {obj.parent!r}"
                )
        _check_parent_cycles(self.objects)

    def to_dict(self) -> dict:
        return {
            "objects": [o.to_dict() for o in self.objects],
            "zones": [z.to_dict() for z in self.zones],
            "architecture": [a.to_dict() for a in self.architecture],
            "image_size": list(self.image_size),
            "room_extent": list(self.room_extent),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneDescription":
        return cls(
            objects=[DescribedObject.from_dict(o) for o in d["objects"]],
            zones=[FunctionalZone.from_dict(z) for z in d.get("zones", [])],
            architecture=[ArchElement.from_dict(a) for a in d.get("architecture", [])],
            image_size=tuple(d.get("image_size", (1024, 1024))),
            room_extent=tuple(d.get("room_extent", (4.0, 4.0))),
        )

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "SceneDescription":
        return cls.from_dict(read_json(path))


def _check_parent_cycles(objects: Sequence[DescribedObject]) -> None:
    parents = {o.id: o.parent for o in objects}
    for start in parents:
        seen = [start]
        cur = parents.get(start)
        while cur is not None:
            if cur in seen:
                cycle = seen[seen.index(cur) :] + [cur]
                raise StructuralError("cyclic parent chain: " + " -> ".join(cycle))
            seen.append(cur)
            cur = parents.get(cur)


# ---------------------------------------------------------------------------
# Graph, sidecar, skeleton
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphNode:
    id: str
    kind: str  # "arch" | "major"
    category: str
    attributes: Tuple[Tuple[str, str], ...] = ()
    geometry_hint: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "category": self.category,
            "attributes": dict(self.attributes),
            "geometry_hint": self.geometry_hint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GraphNode":
        return cls(
            id=d["id"],
            kind=d["kind"],
            category=d["category"],
            attributes=tuple(sorted(d.get("attributes", {}).items())),
            geometry_hint=d.get("geometry_hint"),
        )


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    relation: str
    provenance: str  # parent | vlm | wall | corner | inverse

    def triple(self) -> Tuple[str, str, str]:
        return (self.src, self.dst, self.relation)

    def to_dict(self) -> dict:
        return {
            "src": self.src,
            "dst": self.dst,
            "relation": self.relation,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GraphEdge":
        return cls(
            src=d["src"], dst=d["dst"], relation=d["relation"], provenance=d["provenance"]
        )


@dataclass
class SceneGraph:
    nodes: Dict[str, GraphNode]
    edges: List[GraphEdge]

    def validate(self) -> None:
        seen_triples = set()
        for e in self.edges:
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise StructuralError(f"edge endpoint missing: {e.triple()}")
            if e.src == e.dst:
                raise StructuralError(f"self edge on {e.src!r}")
            if e.triple() in seen_triples:
                raise StructuralError(f"duplicate edge {e.triple()}")
            seen_triples.add(e.triple())
        for e in self.edges:
            if e.provenance == "inverse":
                continue
            inv = INVERSE_RELATIONS.get(e.relation)
            if inv is None:
                continue
            matches = [
                o
                for o in self.edges
                if o.provenance == "inverse"
                and o.triple() == (e.dst, e.src, inv)
            ]
            if len(matches) != 1:
                raise StructuralError(
                    f"edge {e.triple()} has {len(matches)} inverse edges, expected 1"
                )

    def to_dict(self) -> dict:
        return {
            "nodes": [self.nodes[k].to_dict() for k in sorted(self.nodes)],
            "edges": [e.to_dict() for e in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneGraph":
        nodes = {n["id"]: GraphNode.from_dict(n) for n in d["nodes"]}
        return cls(nodes=nodes, edges=[GraphEdge.from_dict(e) for e in d["edges"]])

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "SceneGraph":
        return cls.from_dict(read_json(path))


@dataclass(frozen=True)
class MinorObject:
    id: str
    category: str
    parent_surface: Optional[str]  # supporting object; None for floor/wall minors
    salience: float
    surface_bound: bool
    size_hint: Optional[Tuple[float, float, float]] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "parent_surface": self.parent_surface,
            "salience": self.salience,
            "surface_bound": self.surface_bound,
            "size_hint": list(self.size_hint) if self.size_hint else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MinorObject":
        return cls(
            id=d["id"],
            category=d["category"],
            parent_surface=d.get("parent_surface"),
            salience=float(d["salience"]),
            surface_bound=bool(d["surface_bound"]),
            size_hint=tuple(d["size_hint"]) if d.get("size_hint") else None,
        )


@dataclass
class MinorSidecar:
    entries: List[MinorObject] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "MinorSidecar":
        return cls(entries=[MinorObject.from_dict(e) for e in d["entries"]])

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "MinorSidecar":
        return cls.from_dict(read_json(path))


@dataclass
class Skeleton:
    v_arch: List[GraphNode]
    v_major: List[GraphNode]
    e_parent: List[GraphEdge]
    minor: MinorSidecar

    def to_dict(self) -> dict:
        return {
            "v_arch": [n.to_dict() for n in self.v_arch],
            "v_major": [n.to_dict() for n in self.v_major],
            "e_parent": [e.to_dict() for e in self.e_parent],
            "minor": self.minor.to_dict(),
        }


@dataclass(frozen=True)
class DroppedEdge:
    edge: GraphEdge
    reason: str

    def to_dict(self) -> dict:
        return {"edge": self.edge.to_dict(), "reason": self.reason}


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def derive_skeleton(desc: SceneDescription) -> Skeleton:
    """Deterministically split a description into the graph skeleton.

    Architecture becomes arch nodes; floor/wall objects that are neither
    surface-bound nor marked minor become major nodes; everything else is
    deferred to the minor sidecar. Hierarchy edges are kept only between
    retained nodes. Output ordering is sorted by id, so the result is
    independent of input ordering.
    """
    for obj in desc.objects:
        if obj.parent is not None and obj.parent not in desc.object_map():
            raise StructuralError(f"object {obj.id!r} names missing parent {obj.parent!r}")
    _check_parent_cycles(desc.objects)

    v_arch = [
        GraphNode(id=a.id, kind="arch", category=a.kind, attributes=a.metadata)
        for a in sorted(desc.architecture, key=lambda a: a.id)
    ]
    majors: List[GraphNode] = []
    minors: List[MinorObject] = []
    for obj in sorted(desc.objects, key=lambda o: o.id):
        surface_bound = obj.placement_type == "surface"
        if surface_bound or obj.minor:
            minors.append(
                MinorObject(
                    id=obj.id,
                    category=obj.category,
                    parent_surface=obj.parent,
                    salience=obj.salience,
                    surface_bound=surface_bound,
                    size_hint=obj.size_hint,
                )
            )
        elif obj.placement_type in ("floor", "wall", "ceiling"):
            majors.append(
                GraphNode(
                    id=obj.id,
                    kind="major",
                    category=obj.category,
                    geometry_hint=None,
                )
            )
    retained = {n.id for n in v_arch} | {n.id for n in majors}
    e_parent = []
    for obj in sorted(desc.objects, key=lambda o: o.id):
        if obj.parent is None:
            continue
        if obj.id in retained and obj.parent in retained:
            e_parent.append(
                GraphEdge(src=obj.parent, dst=obj.id, relation="parent_of", provenance="parent")
            )
    e_parent.sort(key=lambda e: (e.src, e.dst))
    return Skeleton(v_arch=v_arch, v_major=majors, e_parent=e_parent, minor=MinorSidecar(minors))


def complete_graph(
    skeleton: Skeleton,
    vlm_edges: Sequence[GraphEdge],
    desc: SceneDescription,
) -> Tuple[SceneGraph, List[DroppedEdge]]:
    """Merge model-proposed relations into the skeleton graph.

    Invalid proposals (unknown endpoints, self edges, relations between two
    architectural nodes, duplicates of an existing edge or of its implied
    inverse) are dropped and reported, never raised. Anchor edges are added
    for objects whose description marks a wall/corner anchor, and every
    invertible edge gains exactly one inverse-provenance twin.
    """
    nodes = {n.id: n for n in skeleton.v_arch + skeleton.v_major}
    edges: List[GraphEdge] = list(skeleton.e_parent)
    triples = {e.triple() for e in edges}
    # Triples already implied by inversion; proposing one of these again is
    # a duplicate, not new information.
    implied = {
        (e.dst, e.src, INVERSE_RELATIONS[e.relation])
        for e in edges
        if e.relation in INVERSE_RELATIONS
    }
    dropped: List[DroppedEdge] = []

    for edge in vlm_edges:
        if edge.src not in nodes or edge.dst not in nodes:
            dropped.append(DroppedEdge(edge, "unknown endpoint"))
            continue
        if edge.src == edge.dst:
            dropped.append(DroppedEdge(edge, "self edge"))
            continue
        if nodes[edge.src].kind == "arch" and nodes[edge.dst].kind == "arch":
            dropped.append(DroppedEdge(edge, "relation between architectural elements"))
            continue
        if edge.relation not in RELATIONS:
            dropped.append(DroppedEdge(edge, f"unknown relation {edge.relation!r}"))
            continue
        if edge.triple() in triples or edge.triple() in implied:
            dropped.append(DroppedEdge(edge, "duplicate"))
            continue
        kept = GraphEdge(edge.src, edge.dst, edge.relation, "vlm")
        edges.append(kept)
        triples.add(kept.triple())
        if kept.relation in INVERSE_RELATIONS:
            implied.add((kept.dst, kept.src, INVERSE_RELATIONS[kept.relation]))

    for obj in sorted(desc.objects, key=lambda o: o.id):
        if obj.anchor is None or obj.id not in nodes:
            continue
        target = obj.anchor.target
        if target not in nodes or nodes[target].kind != "arch":
            dropped.append(
                DroppedEdge(
                    GraphEdge(obj.id, target, obj.anchor.kind, "wall"),
                    "anchor target is not an architectural node",
                )
            )
            continue
        provenance = "wall" if obj.anchor.kind == "against_wall" else "corner"
        anchor_edge = GraphEdge(obj.id, target, obj.anchor.kind, provenance)
        if anchor_edge.triple() in triples:
            continue
        edges.append(anchor_edge)
        triples.add(anchor_edge.triple())

    inverses = []
    for e in edges:
        inv = INVERSE_RELATIONS.get(e.relation)
        if inv is None:
            continue
        inverses.append(GraphEdge(e.dst, e.src, inv, "inverse"))
    edges.extend(inverses)

    graph = SceneGraph(nodes=nodes, edges=edges)
    graph.validate()
    return graph, dropped


def wall_subset(desc: SceneDescription) -> List[DescribedObject]:
    """Wall-placed objects, in stable id order."""
    return sorted(
        (o for o in desc.objects if o.placement_type == "wall"), key=lambda o: o.id
    )


def select_salient_minors(
    sidecar: MinorSidecar, threshold: float = DEFAULT_SALIENCE_THRESHOLD
) -> List[MinorObject]:
    """Minor objects worth placing at coarse layout scale.

    Surface-bound entries are always deferred to fine-grained placement,
    whatever their salience; the rest pass when salience >= threshold.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("salience threshold must lie in [0, 1]")
    return [
        m
        for m in sorted(sidecar.entries, key=lambda m: m.id)
        if not m.surface_bound and m.salience >= threshold
    ]
