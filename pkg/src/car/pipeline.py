"""Stage orchestrator: drives the ten-stage image-to-scene-script run.

Each stage reads its memory view, calls its provider where one is defined,
writes typed artifacts back, and persists the run directory incrementally.
A failing stage halts the run (later stages are marked skipped) and leaves
the partial directory for inspection. Stage numbering runs 1..10 with 7
intentionally unused.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import assets as assets_mod
from . import geometry
from .correction import (
    CorrectionConfig,
    FixupConfig,
    correct_placements,
    object_top,
    static_fixups,
)
from .jsonio import write_json
from .memory import (
    DEFAULT_VIEW_TABLE,
    MemoryEntry,
    MemoryStore,
    PROGRAM_CHAIN,
    ablated_view_table,
)
from .model import (
    GraphEdge,
    GraphNode,
    MinorSidecar,
    SceneDescription,
    SceneGraph,
    Skeleton,
    complete_graph,
    derive_skeleton,
    select_salient_minors,
    wall_subset,
)
from .preview import render_preview
from .program import (
    Cutout,
    LightingPlan,
    MaterialAssign,
    MaterialSpec,
    Part,
    Pose,
    Proxy,
    RoomShell,
    SceneProgram,
    TextureBind,
    WallSegment,
    append_objects,
    apply_materials,
    apply_textures,
    default_walls,
    geometry_dict_to_payload,
    geometry_hash,
    render_setup,
    replace_with_parts,
)
from .providers import (
    Provider,
    ProviderRequest,
    StubTextureSynthesizer,
    TextureSynthesizer,
    build_prompt,
    provider_from_config,
    schema_for_stage,
)
from .refine import LoopConfig, RefineContext, run_loop
from .emit import EmitOptions, emit_blender_script

logger = logging.getLogger(__name__)

STAGE_ORDER = ("1", "2", "3", "4", "5", "6", "8", "9", "10")

TEXTURE_CATEGORIES = frozenset(
    {"rug", "carpet", "painting", "poster", "artwork", "panel", "tapestry"}
)

MINOR_DEFAULT_SIZE = (0.15, 0.15, 0.15)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


@dataclass
class ObjectProfile:
    id: str
    color: str
    material: str
    function: str
    structure: str
    style: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "color": self.color,
            "material": self.material,
            "function": self.function,
            "structure": self.structure,
            "style": self.style,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectProfile":
        return cls(
            id=d["id"],
            color=d["color"],
            material=d["material"],
            function=d["function"],
            structure=d["structure"],
            style=d["style"],
        )


@dataclass
class RoomStyle:
    palette: List[str]
    style: str
    mood: str
    lighting: str

    def to_dict(self) -> dict:
        return {
            "palette": list(self.palette),
            "style": self.style,
            "mood": self.mood,
            "lighting": self.lighting,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoomStyle":
        return cls(
            palette=list(d["palette"]),
            style=d["style"],
            mood=d["mood"],
            lighting=d["lighting"],
        )


@dataclass
class PipelineConfig:
    provider: dict = field(default_factory=lambda: {"kind": "scripted"})
    fixtures_root: Optional[str] = None
    run_root: str = "run"
    loop: LoopConfig = field(default_factory=LoopConfig)
    correction: CorrectionConfig = field(default_factory=CorrectionConfig)
    salience_threshold: float = 0.5
    no_memory: bool = False
    preview_px_per_m: float = 40.0
    wall_height: float = 2.6
    asset_index: Optional[str] = None
    light_min: float = 0.5
    light_max: float = 1000.0
    record_timestamps: bool = True

    def to_dict(self) -> dict:
        return {
            "provider": self.provider,
            "fixtures_root": self.fixtures_root,
            "run_root": self.run_root,
            "loop": {"t_max": self.loop.t_max, "s_star": self.loop.s_star},
            "correction": {
                "grid_step": self.correction.grid_step,
                "max_radius": self.correction.max_radius,
                "collision_scope": self.correction.collision_scope,
                "underlay_height": self.correction.underlay_height,
            },
            "salience_threshold": self.salience_threshold,
            "no_memory": self.no_memory,
            "preview_px_per_m": self.preview_px_per_m,
            "wall_height": self.wall_height,
            "asset_index": self.asset_index,
            "light_min": self.light_min,
            "light_max": self.light_max,
        }


@dataclass
class StageStatus:
    stage: str
    status: str  # ok | failed | skipped
    error: Optional[str] = None
    inputs: List[List] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "status": self.status,
            "error": self.error,
            "inputs": self.inputs,
            "notes": self.notes,
        }


@dataclass
class RunState:
    scene_id: str
    run_dir: str
    stages: List[StageStatus] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return all(s.status == "ok" for s in self.stages) and len(self.stages) == len(
            STAGE_ORDER
        )

    def status_of(self, stage: str) -> Optional[str]:
        for s in self.stages:
            if s.stage == stage:
                return s.status
        return None

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "run_dir": self.run_dir,
            "completed": self.completed,
            "stages": [s.to_dict() for s in self.stages],
            "config": self.config,
        }


# ---------------------------------------------------------------------------
# Shell construction from the scene description / graph
# ---------------------------------------------------------------------------


def shell_from_description(desc: SceneDescription, wall_height: float = 2.6) -> RoomShell:
    """Room shell from described architecture; defaults fill the gaps."""
    width, depth = desc.room_extent
    walls = []
    for arch in desc.architecture:
        if arch.kind != "wall":
            continue
        seg = arch.geometry.get("segment")
        if seg:
            walls.append(WallSegment(id=arch.id, start=tuple(seg[0]), end=tuple(seg[1])))
    if not walls:
        walls = list(default_walls(width, depth))
    shell = RoomShell(
        width=width, depth=depth, wall_height=wall_height, walls=tuple(walls)
    )
    cutouts = []
    for arch in desc.architecture:
        if arch.kind not in ("door", "window"):
            continue
        geometry_spec = arch.geometry
        if "segment" in geometry_spec:
            (x1, y1), (x2, y2) = geometry_spec["segment"]
            center_pt = ((x1 + x2) / 2.0, (y1 + y2) / 2.0)
            width_m = math.hypot(x2 - x1, y2 - y1)
        elif "rect" in geometry_spec:
            x, y, w, h = geometry_spec["rect"]
            center_pt = (x + w / 2.0, y + h / 2.0)
            width_m = max(w, h)
        else:
            continue
        wall, along = _closest_wall(shell, center_pt)
        if wall is None:
            continue
        metadata = dict(arch.metadata)
        if arch.kind == "door":
            bottom, height = 0.0, float(metadata.get("height", 2.0))
        else:
            bottom = float(metadata.get("sill", 0.9))
            height = float(metadata.get("height", 1.2))
        cutouts.append(
            Cutout(
                kind=arch.kind,
                wall=wall.id,
                center=along,
                width=width_m,
                bottom=bottom,
                height=height,
            )
        )
    return RoomShell(
        width=width,
        depth=depth,
        wall_height=wall_height,
        walls=tuple(walls),
        cutouts=tuple(cutouts),
    )


def _closest_wall(shell: RoomShell, point) -> Tuple[Optional[WallSegment], float]:
    best, best_d, best_t = None, math.inf, 0.0
    for wall in shell.walls:
        projected, t = geometry.project_point_to_segment(point, wall.start, wall.end)
        d = math.hypot(projected[0] - point[0], projected[1] - point[1])
        if d < best_d:
            best, best_d, best_t = wall, d, t
    if best is None:
        return None, 0.0
    length = math.hypot(best.end[0] - best.start[0], best.end[1] - best.start[1])
    return best, best_t * length


def shell_from_graph(graph: SceneGraph, wall_height: float = 2.6) -> Optional[RoomShell]:
    """Reconstruct the shell from arch-node geometry stashed in the graph."""
    walls = []
    for node in graph.nodes.values():
        if node.kind != "arch" or node.category != "wall":
            continue
        attrs = dict(node.attributes)
        seg_text = attrs.get("geometry")
        if not seg_text:
            continue
        try:
            seg = json.loads(seg_text).get("segment")
        except ValueError:
            continue
        if seg:
            walls.append(WallSegment(id=node.id, start=tuple(seg[0]), end=tuple(seg[1])))
    if not walls:
        return None
    xs = [p for w in walls for p in (w.start[0], w.end[0])]
    ys = [p for w in walls for p in (w.start[1], w.end[1])]
    width, depth = max(xs), max(ys)
    if width <= 0 or depth <= 0:
        return None
    return RoomShell(width=width, depth=depth, wall_height=wall_height, walls=tuple(walls))


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


class Pipeline:
    def __init__(
        self,
        config: PipelineConfig,
        provider: Optional[Provider] = None,
        texture_synth: Optional[TextureSynthesizer] = None,
    ):
        self.config = config
        self.provider = provider or provider_from_config(
            config.provider, fixtures_root=config.fixtures_root
        )
        self.texture_synth = texture_synth or StubTextureSynthesizer()
        self.library = (
            assets_mod.AssetLibrary.load(config.asset_index) if config.asset_index else None
        )

    # -- helpers -----------------------------------------------------------

    def _metadata(self, request: Optional[ProviderRequest] = None, **extra) -> dict:
        meta = {"provider": getattr(self.provider, "provider_id", "none")}
        if request is not None:
            meta["prompt_hash"] = request.prompt_hash
            meta["iteration"] = str(request.iteration)
        if self.config.record_timestamps:
            meta["wall_clock"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        meta.update({k: str(v) for k, v in extra.items()})
        return meta

    def _call(self, stage: str, scene_id: str, slots: dict, iteration: int = 0):
        request = ProviderRequest(
            stage=stage,
            scene_id=scene_id,
            prompt=build_prompt(stage, slots),
            response_schema=schema_for_stage(stage),
            iteration=iteration,
        )
        return request, self.provider.call(request)

    # -- run ---------------------------------------------------------------

    def run_all(self, image_path, scene_id: str, run_dir=None) -> RunState:
        image_path = Path(image_path)
        if not image_path.exists():
            raise FileNotFoundError(f"input image not found: {image_path}")
        run_dir = Path(run_dir) if run_dir else Path(self.config.run_root) / scene_id
        for sub in ("memory", "previews", "out", "textures"):
            (run_dir / sub).mkdir(parents=True, exist_ok=True)

        view_table = (
            ablated_view_table(PROGRAM_CHAIN) if self.config.no_memory else dict(DEFAULT_VIEW_TABLE)
        )
        store = MemoryStore(entries=[], view_table=view_table)
        image_payload = {
            "name": image_path.name,
            "sha256": hashlib.sha256(image_path.read_bytes()).hexdigest(),
        }
        store = store.append(
            MemoryEntry(
                stage="0",
                artifact_type="image",
                payload=image_payload,
                metadata=self._metadata(),
            )
        )
        state = RunState(
            scene_id=scene_id, run_dir=str(run_dir), config=self.config.to_dict()
        )

        halted = False
        for stage in STAGE_ORDER:
            if halted:
                state.stages.append(StageStatus(stage=stage, status="skipped"))
                continue
            status = StageStatus(stage=stage, status="ok")
            try:
                view = store.view(stage)
                status.inputs = [[e.stage, e.artifact_type, e.iteration] for e in view]
                runner = getattr(self, f"_stage{stage}")
                store = runner(store, scene_id, run_dir, status)
            except Exception as exc:  # halt-and-preserve
                logger.exception("stage %s failed for scene %s", stage, scene_id)
                status.status = "failed"
                status.error = f"{type(exc).__name__}: {exc}"
                halted = True
            state.stages.append(status)
            store.persist(run_dir / "memory")
            write_json(run_dir / "report.json", state.to_dict())
        return state

    # -- view decoding -------------------------------------------------------

    @staticmethod
    def _payload(store: MemoryStore, stage: str, view_stage: str, artifact_type: str):
        for entry in reversed(store.view(stage)):
            if entry.stage == view_stage and entry.artifact_type == artifact_type:
                return entry.payload
        return None

    def _desc(self, store, stage) -> Optional[SceneDescription]:
        payload = self._payload(store, stage, "1", "description")
        return SceneDescription.from_dict(payload) if payload else None

    def _graph(self, store, stage) -> Optional[SceneGraph]:
        payload = self._payload(store, stage, "2", "graph")
        return SceneGraph.from_dict(payload) if payload else None

    def _sidecar(self, store, stage) -> Optional[MinorSidecar]:
        payload = self._payload(store, stage, "2", "sidecar")
        return MinorSidecar.from_dict(payload) if payload else None

    def _program(self, store, stage, view_stage, artifact_type="scene_program"):
        payload = self._payload(store, stage, view_stage, artifact_type)
        if payload is None:
            return None
        from .program import parse

        return parse(json.dumps(payload))

    # -- stages ----------------------------------------------------------------

    def _stage1(self, store, scene_id, run_dir, status) -> MemoryStore:
        request, response = self._call("1", scene_id, {"context": scene_id})
        desc = SceneDescription.from_dict(response.payload)
        desc.validate()
        desc.save(run_dir / "out" / "stage1_description.json")
        return store.append(
            MemoryEntry(
                stage="1",
                artifact_type="description",
                payload=desc.to_dict(),
                metadata=self._metadata(request),
            )
        )

    def _stage2(self, store, scene_id, run_dir, status) -> MemoryStore:
        desc = self._desc(store, "2")
        if desc is None:
            raise StageError("2", "scene description unavailable in view")
        skeleton = derive_skeleton(desc)
        # Stash wall geometry on arch nodes so later stages can rebuild the
        # shell from the graph alone.
        arch_geometry = {a.id: a.geometry for a in desc.architecture}
        skeleton = Skeleton(
            v_arch=[
                GraphNode(
                    id=n.id,
                    kind=n.kind,
                    category=n.category,
                    attributes=tuple(
                        sorted(
                            dict(
                                n.attributes,
                                geometry=json.dumps(arch_geometry.get(n.id, {}), sort_keys=True),
                            ).items()
                        )
                    ),
                    geometry_hint=n.geometry_hint,
                )
                for n in skeleton.v_arch
            ],
            v_major=skeleton.v_major,
            e_parent=skeleton.e_parent,
            minor=skeleton.minor,
        )
        request, response = self._call(
            "2", scene_id, {"description": json.dumps(desc.to_dict(), sort_keys=True)}
        )
        vlm_edges = [
            GraphEdge(src=e["src"], dst=e["dst"], relation=e["relation"], provenance="vlm")
            for e in response.payload["edges"]
        ]
        graph, dropped = complete_graph(skeleton, vlm_edges, desc)
        if dropped:
            status.notes.append(f"dropped {len(dropped)} proposed edges")
        attributes = response.payload.get("attributes", {})
        hints = response.payload.get("geometry_hints", {})
        if attributes or hints:
            for node_id in list(graph.nodes):
                node = graph.nodes[node_id]
                extra = attributes.get(node_id)
                hint = hints.get(node_id)
                if not extra and hint is None:
                    continue
                merged = dict(node.attributes)
                if extra:
                    merged.update({k: str(v) for k, v in extra.items()})
                graph.nodes[node_id] = GraphNode(
                    id=node.id,
                    kind=node.kind,
                    category=node.category,
                    attributes=tuple(sorted(merged.items())),
                    geometry_hint=hint if hint is not None else node.geometry_hint,
                )
        graph.save(run_dir / "out" / "stage2_graph.json")
        graph_dropped = [d.to_dict() for d in dropped]
        if graph_dropped:
            write_json(run_dir / "out" / "stage2_dropped_edges.json", graph_dropped)
        skeleton.minor.save(run_dir / "out" / "stage2_minors.json")
        store = store.append(
            MemoryEntry(
                stage="2",
                artifact_type="graph",
                payload=graph.to_dict(),
                metadata=self._metadata(request),
            )
        )
        return store.append(
            MemoryEntry(
                stage="2",
                artifact_type="sidecar",
                payload=skeleton.minor.to_dict(),
                metadata=self._metadata(request),
            )
        )

    def _stage3(self, store, scene_id, run_dir, status) -> MemoryStore:
        desc = self._desc(store, "3")
        graph = self._graph(store, "3")
        if graph is None:
            raise StageError("3", "scene graph unavailable in view")
        if desc is not None:
            shell = shell_from_description(desc, self.config.wall_height)
        else:
            shell = shell_from_graph(graph, self.config.wall_height)
            if shell is None:
                raise StageError("3", "no room shell derivable from the view")
        slots = {
            "room_extent": f"{shell.width} x {shell.depth} m",
            "graph": json.dumps(graph.to_dict(), sort_keys=True),
        }
        request, response = self._call("3_generate", scene_id, slots)
        proxies = [
            _proxy_from_payload(obj)
            for obj in response.payload["objects"]
        ]
        program = SceneProgram(shell=shell, statements=list(proxies))
        program.validate()

        sanitize_desc = desc if desc is not None else SceneDescription(objects=[])
        ctx = RefineContext(scene_id=scene_id, desc=sanitize_desc, graph=graph)
        previews = run_dir / "previews"

        def renderer(current: SceneProgram, iteration: int) -> str:
            path = previews / f"stage3_iter{iteration}.png"
            render_preview(current, self.config.preview_px_per_m).save(path)
            return str(path.relative_to(run_dir))

        refined, trace = run_loop(program, ctx, self.config.loop, renderer, self.provider)
        trace.save(run_dir / "out" / "stage3_trace.json")
        status.notes.append(
            f"loop iterations: {len(trace.iterations)}, stopped_by_score: {trace.stopped_by_score}"
        )
        store = store.append(
            MemoryEntry(
                stage="3",
                artifact_type="layout_program",
                payload=refined.to_dict(),
                metadata=self._metadata(request),
            )
        )
        return store.append(
            MemoryEntry(
                stage="3",
                artifact_type="critique",
                payload=trace.to_dict(),
                metadata=self._metadata(request),
            )
        )

    def _stage4(self, store, scene_id, run_dir, status) -> MemoryStore:
        major = self._program(store, "4", "3", "layout_program")
        if major is None:
            raise StageError("4", "major layout unavailable in view")
        desc = self._desc(store, "4")
        sidecar = self._sidecar(store, "4")
        wall_ids = [o.id for o in wall_subset(desc)] if desc is not None else []
        salient_ids = (
            [m.id for m in select_salient_minors(sidecar, self.config.salience_threshold)]
            if sidecar is not None
            else []
        )
        request = None
        walls: List[Proxy] = []
        minors: List[Proxy] = []
        if wall_ids or salient_ids:
            slots = {
                "wall_objects": ", ".join(wall_ids) or "none",
                "minor_objects": ", ".join(salient_ids) or "none",
            }
            request, response = self._call("4", scene_id, slots)
            by_id = {obj["id"]: obj for obj in response.payload["objects"]}
            for oid in wall_ids:
                if oid in by_id:
                    walls.append(_proxy_from_payload(by_id[oid], placement="wall"))
                else:
                    status.notes.append(f"no placement proposed for wall object {oid}")
            for oid in salient_ids:
                if oid in by_id:
                    minors.append(_proxy_from_payload(by_id[oid], placement="floor"))
                else:
                    status.notes.append(f"no placement proposed for minor object {oid}")
        else:
            status.notes.append("no wall or salient minor objects to append")
        layout = append_objects(major, walls, minors)
        layout.validate()
        return store.append(
            MemoryEntry(
                stage="4",
                artifact_type="layout_program",
                payload=layout.to_dict(),
                metadata=self._metadata(request),
            )
        )

    def _stage5(self, store, scene_id, run_dir, status) -> MemoryStore:
        layout = self._program(store, "5", "4", "layout_program")
        if layout is None:
            raise StageError("5", "layout program unavailable in view")
        placed_ids = layout.object_ids()
        slots = {"objects": ", ".join(sorted(placed_ids))}
        request, response = self._call("5", scene_id, slots)
        profiles = [ObjectProfile.from_dict(p) for p in response.payload["profiles"]]
        known = set(placed_ids)
        extra = [p.id for p in profiles if p.id not in known]
        if extra:
            status.notes.append(f"dropped profiles for unplaced objects: {sorted(extra)}")
            profiles = [p for p in profiles if p.id in known]
        missing = sorted(known - {p.id for p in profiles})
        if missing:
            raise StageError("5", f"profiles missing for placed objects: {missing}")
        style = RoomStyle.from_dict(response.payload["room_style"])
        store = store.append(
            MemoryEntry(
                stage="5",
                artifact_type="profile_set",
                payload={"profiles": [p.to_dict() for p in profiles]},
                metadata=self._metadata(request),
            )
        )
        return store.append(
            MemoryEntry(
                stage="5",
                artifact_type="room_style",
                payload=style.to_dict(),
                metadata=self._metadata(request),
            )
        )

    def _stage6(self, store, scene_id, run_dir, status) -> MemoryStore:
        layout = self._program(store, "6", "4", "layout_program")
        if layout is None:
            raise StageError("6", "layout program unavailable in view")
        profile_payload = self._payload(store, "6", "5", "profile_set")
        profiles = {
            p["id"]: ObjectProfile.from_dict(p)
            for p in (profile_payload or {"profiles": []})["profiles"]
        }
        sidecar = self._sidecar(store, "6")
        slots = {"profiles": json.dumps(sorted(profiles), default=str)}
        request, response = self._call("6", scene_id, slots)

        proxy_ids = {s.id for s in layout.objects() if s.kind == "proxy"}
        mapping: Dict[str, List[Part]] = {}
        dropped_parts = []
        for oid, part_rows in response.payload["parts"].items():
            if oid not in proxy_ids:
                dropped_parts.append(oid)
                continue
            mapping[oid] = [
                Part(
                    name=row["name"],
                    primitive=row["primitive"],
                    size=tuple(row["size"]),
                    offset=tuple(row["offset"]),
                    rotation=tuple(row.get("rotation", (0.0, 0.0, 0.0))),
                )
                for row in part_rows
            ]
        if dropped_parts:
            status.notes.append(
                f"dropped part decompositions for unplaced objects: {sorted(dropped_parts)}"
            )
        program, gdict = replace_with_parts(layout, mapping)

        unplaced: List[str] = []
        if sidecar is not None:
            program, placed, unplaced = _place_surface_minors(program, sidecar)
            if placed:
                status.notes.append(f"placed surface minors: {placed}")
        else:
            status.notes.append("sidecar unavailable; surface minors skipped")
        if unplaced:
            status.notes.append(f"unplaced minors (no free surface): {unplaced}")

        flagged = set(response.payload.get("retrieval", []))
        if sidecar is not None:
            for entry in sidecar.entries:
                if entry.category in assets_mod.RETRIEVAL_CATEGORIES:
                    flagged.add(entry.id)
        substituted = []
        if self.library is not None:
            for oid in sorted(flagged):
                target = program.find_object(oid)
                if target is None or target.kind != "proxy":
                    continue
                profile = profiles.get(oid)
                description = (
                    f"{profile.color} {profile.material} {profile.style}"
                    if profile
                    else target.category
                )
                query = assets_mod.MatchQuery(
                    label=target.category,
                    description=description,
                    placeholder_size=target.size,
                )
                record = assets_mod.select_asset(self.library, query)
                if record is None:
                    status.notes.append(f"no library match for {oid}; placeholder kept")
                    continue
                program = assets_mod.substitute_placeholder(program, oid, record)
                substituted.append(f"{oid}->{record.asset_id}")
        if substituted:
            status.notes.append(f"asset substitutions: {substituted}")

        for statement in program.objects():
            footprint = geometry.footprint_of(statement)
            if not geometry.contained_in_room(footprint, program.shell, tol=1e-6):
                status.notes.append(f"{statement.id} extends outside the room pre-correction")

        program.validate()
        store = store.append(
            MemoryEntry(
                stage="6",
                artifact_type="scene_program",
                payload=program.to_dict(),
                metadata=self._metadata(request),
            )
        )
        return store.append(
            MemoryEntry(
                stage="6",
                artifact_type="geometry_dict",
                payload=geometry_dict_to_payload(gdict),
                metadata=self._metadata(request),
            )
        )

    def _stage8(self, store, scene_id, run_dir, status) -> MemoryStore:
        program = self._program(store, "8", "6")
        if program is None:
            raise StageError("8", "scene program unavailable in view")
        gdict_payload = self._payload(store, "8", "6", "geometry_dict") or {}
        style_payload = self._payload(store, "8", "5", "room_style") or {}
        slots = {
            "parts": json.dumps(
                {k: [p["name"] for p in v] for k, v in sorted(gdict_payload.items())}
            ),
            "room_style": json.dumps(style_payload, sort_keys=True),
        }
        request, response = self._call("8", scene_id, slots)
        targets = program.resolvable_targets()
        assignments = []
        dropped = []
        for row in response.payload["assignments"]:
            if row["target"] not in targets:
                dropped.append(row["target"])
                continue
            assignments.append(
                MaterialAssign(
                    target=row["target"],
                    spec=MaterialSpec(
                        material_type=row["material_type"],
                        base_color=tuple(row["base_color"]),
                        roughness=float(row.get("roughness", 0.5)),
                        metallic=float(row.get("metallic", 0.0)),
                        specular=float(row.get("specular", 0.5)),
                    ),
                )
            )
        if dropped:
            status.notes.append(f"dropped material targets: {sorted(set(dropped))}")
        before = geometry_hash(program)
        program = apply_materials(program, assignments)
        if geometry_hash(program) != before:
            raise StageError("8", "material pass altered geometry")
        return store.append(
            MemoryEntry(
                stage="8",
                artifact_type="scene_program",
                payload=program.to_dict(),
                metadata=self._metadata(request),
            )
        )

    def _stage9(self, store, scene_id, run_dir, status) -> MemoryStore:
        program = self._program(store, "9", "8")
        if program is None:
            raise StageError("9", "scene program unavailable in view")
        style_payload = self._payload(store, "9", "5", "room_style") or {}
        style_words = " ".join(style_payload.get("palette", [])) or "neutral"
        targets: List[Tuple[str, str, dict]] = [
            ("floor", f"{style_words} floor material, seamless, top view", {"mode": "tile", "scale": [4.0, 4.0]}),
        ]
        for wall in program.shell.walls:
            targets.append(
                (wall.id, f"{style_words} wall finish, seamless", {"mode": "tile", "scale": [2.0, 2.0]})
            )
        for statement in program.objects():
            if statement.category in TEXTURE_CATEGORIES:
                targets.append(
                    (
                        statement.id,
                        f"{style_words} {statement.category} texture",
                        {"mode": "planar"},
                    )
                )
        binds = []
        for target, prompt, uv in targets:
            safe = target.replace("/", "_")
            rel = f"textures/{safe}.png"
            try:
                self.texture_synth.generate(prompt, run_dir / rel)
            except Exception as exc:
                # One retry with a simplified prompt, then the checker stands in.
                logger.warning("texture synthesis failed for %s (%s); retrying", target, exc)
                try:
                    self.texture_synth.generate(f"{target} texture", run_dir / rel)
                except Exception:
                    status.notes.append(f"texture generation failed for {target}")
                    rel = "builtin:checker"
            binds.append(TextureBind(target=target, image_ref=rel, uv=uv))
        before = geometry_hash(program)
        program = apply_textures(program, binds, image_root=run_dir)
        if geometry_hash(program) != before:
            raise StageError("9", "texture pass altered geometry")
        return store.append(
            MemoryEntry(
                stage="9",
                artifact_type="scene_program",
                payload=program.to_dict(),
                metadata=self._metadata(),
            )
        )

    def _stage10(self, store, scene_id, run_dir, status) -> MemoryStore:
        program = self._program(store, "10", "9")
        if program is None:
            raise StageError("10", "scene program unavailable in view")
        request, response = self._call(
            "10", scene_id, {"scene": ", ".join(program.object_ids())}
        )
        plan = LightingPlan.from_dict(response.payload)
        before = geometry_hash(program)
        program = render_setup(program, plan)
        program, fixes = static_fixups(
            program,
            FixupConfig(
                light_min=self.config.light_min,
                light_max=self.config.light_max,
                texture_root=str(run_dir),
            ),
        )
        if fixes:
            status.notes.append(f"static fixes: {[f.kind for f in fixes]}")
        if geometry_hash(program) != before:
            raise StageError("10", "render setup altered geometry")
        program, report = correct_placements(program, self.config.correction)
        if report.unresolved:
            status.notes.append(f"unresolved placements: {report.unresolved}")
        report.save(run_dir / "out" / "stage10_correction.json")
        program.save(run_dir / "out" / "final_program.json")
        script = emit_blender_script(
            program,
            EmitOptions(
                shim_mode="self_contained",
                output_path=str(run_dir / "out" / "scene.blend.py"),
                asset_root=str(self.library.root) if self.library else None,
                texture_root="@run",
            ),
        )
        status.notes.append(f"emitted script: {len(script.splitlines())} lines")
        render_preview(program, self.config.preview_px_per_m).save(
            run_dir / "previews" / "final.png"
        )
        store = store.append(
            MemoryEntry(
                stage="10",
                artifact_type="scene_program",
                payload=program.to_dict(),
                metadata=self._metadata(request),
            )
        )
        return store.append(
            MemoryEntry(
                stage="10",
                artifact_type="report",
                payload=report.to_dict(),
                metadata=self._metadata(request),
            )
        )


def _proxy_from_payload(obj: dict, placement: Optional[str] = None) -> Proxy:
    return Proxy(
        id=obj["id"],
        category=obj["category"],
        pose=Pose(position=tuple(obj["position"]), yaw=float(obj.get("yaw", 0.0))),
        size=tuple(obj["size"]),
        parent=obj.get("parent"),
        placement_type=placement or obj.get("placement_type", "floor"),
    )


def _surfaces_for(statement, cell: float = geometry.DEFAULT_CELL):
    if statement.kind == "assembly":
        return geometry.discover_surfaces(statement, cell)
    footprint = geometry.footprint_of(statement)
    nx = max(1, int(math.floor(2 * footprint.half_extent[0] / cell)))
    ny = max(1, int(math.floor(2 * footprint.half_extent[1] / cell)))
    return [
        geometry.SupportSurface(
            owner=statement.id,
            part="top",
            height=object_top(statement),
            rect=footprint,
            cell=cell,
            free_cells=np.ones((ny, nx), dtype=bool),
        )
    ]


def _place_surface_minors(
    program: SceneProgram, sidecar: MinorSidecar
) -> Tuple[SceneProgram, List[str], List[str]]:
    """Seat surface-bound minors on their parents via occupancy grids."""
    placed: List[str] = []
    unplaced: List[str] = []
    surface_cache: Dict[str, list] = {}
    statements = list(program.statements)
    existing = {s.id for s in program.objects()}

    for entry in sorted(
        (e for e in sidecar.entries if e.surface_bound),
        key=lambda e: (-e.salience, e.id),
    ):
        if entry.id in existing or entry.parent_surface is None:
            continue
        parent = next(
            (s for s in statements if getattr(s, "id", None) == entry.parent_surface),
            None,
        )
        if parent is None or parent.kind not in ("proxy", "assembly"):
            unplaced.append(entry.id)
            continue
        if entry.parent_surface not in surface_cache:
            surface_cache[entry.parent_surface] = _surfaces_for(parent)
        size = entry.size_hint or MINOR_DEFAULT_SIZE
        slot = None
        surfaces = surface_cache[entry.parent_surface]
        for i, surface in enumerate(surfaces):
            slot = geometry.find_free_slot(surface, (size[0], size[1]))
            if slot is not None:
                footprint = geometry.Footprint(
                    center=(slot.position[0], slot.position[1]),
                    half_extent=(size[0] / 2.0, size[1] / 2.0),
                    yaw=slot.yaw,
                )
                surfaces[i] = geometry.occupy(surface, footprint)
                break
        if slot is None:
            unplaced.append(entry.id)
            continue
        statements.append(
            Proxy(
                id=entry.id,
                category=entry.category,
                pose=Pose(position=slot.position, yaw=slot.yaw),
                size=tuple(size),
                parent=entry.parent_surface,
                placement_type="surface",
            )
        )
        existing.add(entry.id)
        placed.append(entry.id)
    return (
        SceneProgram(shell=program.shell, statements=statements, version=program.version),
        placed,
        unplaced,
    )
