"""Benchmark evaluator: generated scene program vs. annotated ground truth.

Covers object recall, functional-zone accuracy, self-overlap, rasterized
layout IoU, spatial-relation consistency, rotation accuracy, support
accuracy, plus pipeline completion and (when Blender is installed)
script execution rate. All rates live in [0, 1]; pure and deterministic.
"""

from __future__ import annotations

import logging
import math
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import geometry
from .correction import object_top
from .jsonio import read_json, write_json
from .program import SceneProgram, parse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsConfig:
    raster_cell: float = 0.01
    yaw_tolerance_deg: float = 15.0
    center_deadband: float = 0.05
    adjacency_gap: float = 0.30
    support_z_tolerance: float = 0.05
    wall_gap: float = 0.15
    corner_radius: float = 0.75
    facing_half_angle: float = math.pi / 4.0


@dataclass(frozen=True)
class AnnotatedZone:
    label: str
    polygon: Tuple[Tuple[float, float], ...]  # normalized [0,1]^2 over the room
    anchors: Tuple[str, ...]  # categories that must sit inside

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "polygon": [list(p) for p in self.polygon],
            "anchors": list(self.anchors),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotatedZone":
        return cls(
            label=d["label"],
            polygon=tuple(tuple(p) for p in d["polygon"]),
            anchors=tuple(d["anchors"]),
        )


@dataclass
class Annotation:
    gt_program: SceneProgram
    relations: List[Tuple[str, str, str]] = field(default_factory=list)
    zones: List[AnnotatedZone] = field(default_factory=list)
    category_aliases: Dict[str, str] = field(default_factory=dict)
    yaw_symmetry: Dict[str, str] = field(default_factory=dict)  # category -> none|pi|half_pi

    def validate(self) -> None:
        ids = set(self.gt_program.object_ids())
        for subject, _, obj in self.relations:
            if subject not in ids or obj not in ids:
                raise ValueError(f"annotated relation references unknown id: {(subject, obj)}")

    def to_dict(self) -> dict:
        return {
            "gt_program": self.gt_program.to_dict(),
            "relations": [list(r) for r in self.relations],
            "zones": [z.to_dict() for z in self.zones],
            "category_aliases": self.category_aliases,
            "yaw_symmetry": self.yaw_symmetry,
        }

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Annotation":
        import json

        annotation = cls(
            gt_program=parse(json.dumps(d["gt_program"])),
            relations=[tuple(r) for r in d.get("relations", [])],
            zones=[AnnotatedZone.from_dict(z) for z in d.get("zones", [])],
            category_aliases=dict(d.get("category_aliases", {})),
            yaw_symmetry=dict(d.get("yaw_symmetry", {})),
        )
        annotation.validate()
        return annotation

    @classmethod
    def load(cls, path) -> "Annotation":
        return cls.from_dict(read_json(path))


@dataclass
class MetricsReport:
    obj_recall: float
    func_acc: float
    self_overlap: float
    layout_iou: float
    spatial_relation: float
    rotation_acc: float
    support_acc: float
    completion: bool = True
    exec_ok: Optional[bool] = None
    evidence: Dict[str, list] = field(default_factory=dict)

    RATE_FIELDS = (
        "obj_recall",
        "func_acc",
        "self_overlap",
        "layout_iou",
        "spatial_relation",
        "rotation_acc",
        "support_acc",
    )

    def validate(self) -> None:
        for name in self.RATE_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} = {value} outside [0, 1]")

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in self.RATE_FIELDS}
        out["completion"] = self.completion
        out["exec_ok"] = self.exec_ok
        # Judge-model columns stay unscored unless a judge is configured.
        out["image_similarity"] = None
        out["scene_usability"] = None
        out["aesthetic_quality"] = None
        out["evidence"] = self.evidence
        return out

    def save(self, path) -> None:
        write_json(path, self.to_dict())


# ---------------------------------------------------------------------------
# Matching helpers
# ---------------------------------------------------------------------------


def _norm_category(category: str, aliases: Dict[str, str]) -> str:
    c = category.strip().lower()
    return aliases.get(c, c)


def _centers(program: SceneProgram) -> Dict[str, Tuple[float, float]]:
    return {s.id: geometry.footprint_of(s).center for s in program.objects()}


def match_objects(
    pred: SceneProgram, gt: SceneProgram, aliases: Dict[str, str]
) -> Dict[str, str]:
    """Category-constrained nearest-center greedy matching, gt id -> pred id."""
    pred_centers = _centers(pred)
    gt_centers = _centers(gt)
    pred_by_cat: Dict[str, List[str]] = {}
    for s in pred.objects():
        pred_by_cat.setdefault(_norm_category(s.category, aliases), []).append(s.id)
    taken = set()
    matches: Dict[str, str] = {}
    for s in sorted(gt.objects(), key=lambda s: s.id):
        candidates = [
            pid
            for pid in pred_by_cat.get(_norm_category(s.category, aliases), [])
            if pid not in taken
        ]
        if not candidates:
            continue
        gx, gy = gt_centers[s.id]
        best = min(
            candidates,
            key=lambda pid: (
                math.hypot(pred_centers[pid][0] - gx, pred_centers[pid][1] - gy),
                pid,
            ),
        )
        matches[s.id] = best
        taken.add(best)
    return matches


# ---------------------------------------------------------------------------
# Individual metrics
# ---------------------------------------------------------------------------


def object_recall(
    pred: SceneProgram, gt: SceneProgram, aliases: Optional[Dict[str, str]] = None
) -> float:
    """Fraction of annotated objects recovered, category-level multiset match."""
    aliases = aliases or {}
    gt_objects = gt.objects()
    if not gt_objects:
        return 1.0
    pred_counts: Dict[str, int] = {}
    for s in pred.objects():
        key = _norm_category(s.category, aliases)
        pred_counts[key] = pred_counts.get(key, 0) + 1
    matched = 0
    for s in gt_objects:
        key = _norm_category(s.category, aliases)
        if pred_counts.get(key, 0) > 0:
            pred_counts[key] -= 1
            matched += 1
    return matched / len(gt_objects)


def _point_in_polygon(point: Tuple[float, float], polygon: Sequence[Tuple[float, float]]) -> bool:
    x, y = point
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
    return inside


def functional_accuracy(pred: SceneProgram, annotation: Annotation) -> float:
    """Fraction of zones whose every anchor category has an object inside."""
    if not annotation.zones:
        return 1.0
    aliases = annotation.category_aliases
    shell = annotation.gt_program.shell
    centers = [
        (_norm_category(s.category, aliases), geometry.footprint_of(s).center)
        for s in pred.objects()
    ]
    satisfied = 0
    for zone in annotation.zones:
        polygon = [(px * shell.width, py * shell.depth) for px, py in zone.polygon]
        ok = True
        for anchor in zone.anchors:
            anchor_key = _norm_category(anchor, aliases)
            if not any(
                cat == anchor_key and _point_in_polygon(center, polygon)
                for cat, center in centers
            ):
                ok = False
                break
        if ok:
            satisfied += 1
    return satisfied / len(annotation.zones)


def _ancestor_related(a: str, b: str, parents: Dict[str, Optional[str]]) -> bool:
    for start, goal in ((a, b), (b, a)):
        cur = parents.get(start)
        hops = 0
        while cur is not None and hops < 64:
            if cur == goal:
                return True
            cur = parents.get(cur)
            hops += 1
    return False


def self_overlap(pred: SceneProgram) -> float:
    """Total pairwise footprint overlap among unrelated floor objects,
    normalized by their total footprint area (pairs counted once)."""
    floors = [s for s in pred.objects() if s.placement_type == "floor"]
    if not floors:
        return 0.0
    parents = {s.id: s.parent for s in pred.objects()}
    footprints = {s.id: geometry.footprint_of(s) for s in floors}
    total_area = sum(fp.area() for fp in footprints.values())
    if total_area == 0:
        return 0.0
    overlap = 0.0
    ids = [s.id for s in floors]
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if _ancestor_related(a, b, parents):
                continue
            overlap += geometry.overlap_area(footprints[a], footprints[b])
    return min(1.0, overlap / total_area)


def _occupancy_mask(program: SceneProgram, shape: Tuple[int, int]) -> np.ndarray:
    """Boolean occupancy over a normalized grid of the program's own shell."""
    ny, nx = shape
    shell = program.shell
    xs = (np.arange(nx) + 0.5) * shell.width / nx
    ys = (np.arange(ny) + 0.5) * shell.depth / ny
    gx, gy = np.meshgrid(xs, ys)
    mask = np.zeros(shape, dtype=bool)
    for s in program.objects():
        fp = geometry.footprint_of(s)
        dx = gx - fp.center[0]
        dy = gy - fp.center[1]
        c, si = math.cos(-fp.yaw), math.sin(-fp.yaw)
        lx = c * dx - si * dy
        ly = si * dx + c * dy
        mask |= (np.abs(lx) <= fp.half_extent[0]) & (np.abs(ly) <= fp.half_extent[1])
    return mask


def layout_iou(
    pred: SceneProgram, gt: SceneProgram, cell: float = MetricsConfig.raster_cell
) -> float:
    """IoU of rasterized occupancy masks over the annotated shell.

    Both scenes rasterize onto the same normalized grid (the prediction is
    thereby rescaled to the annotated extent before comparison).
    """
    nx = max(1, int(round(gt.shell.width / cell)))
    ny = max(1, int(round(gt.shell.depth / cell)))
    gt_mask = _occupancy_mask(gt, (ny, nx))
    pred_mask = _occupancy_mask(pred, (ny, nx))
    union = int(np.logical_or(gt_mask, pred_mask).sum())
    if union == 0:
        return 1.0
    intersection = int(np.logical_and(gt_mask, pred_mask).sum())
    return intersection / union


def _facing_vector(yaw: float) -> Tuple[float, float]:
    return (-math.sin(yaw), math.cos(yaw))


def _check_relation(
    pred: SceneProgram,
    subject_id: str,
    relation: str,
    object_id: str,
    cfg: MetricsConfig,
) -> bool:
    a = pred.find_object(subject_id)
    b = pred.find_object(object_id)
    if a is None or b is None:
        return False
    fa, fb = geometry.footprint_of(a), geometry.footprint_of(b)
    ax, ay = fa.center
    bx, by = fb.center
    dead = cfg.center_deadband
    if relation == "left_of":
        return ax <= bx - dead
    if relation == "right_of":
        return ax >= bx + dead
    if relation == "front_of":
        return ay <= by - dead
    if relation == "behind":
        return ay >= by + dead
    if relation == "adjacent_to":
        return geometry.rect_distance(fa, fb) <= cfg.adjacency_gap
    if relation in ("on_top_of", "child_of"):
        # subject rests on object
        return _supported_on(a, b, cfg)
    if relation in ("under", "parent_of"):
        return _supported_on(b, a, cfg)
    if relation == "against_wall":
        shell = pred.shell
        best = math.inf
        for wall in shell.walls:
            for corner in fa.corners():
                proj, _ = geometry.project_point_to_segment(corner, wall.start, wall.end)
                best = min(best, math.hypot(corner[0] - proj[0], corner[1] - proj[1]))
        return best <= cfg.wall_gap
    if relation == "in_corner":
        shell = pred.shell
        corners = [(0, 0), (shell.width, 0), (shell.width, shell.depth), (0, shell.depth)]
        return any(math.hypot(ax - cx, ay - cy) <= cfg.corner_radius for cx, cy in corners)
    if relation == "faces":
        fx, fy = _facing_vector(a.pose.yaw)
        dx, dy = bx - ax, by - ay
        norm = math.hypot(dx, dy)
        if norm == 0:
            return True
        cos_angle = (fx * dx + fy * dy) / norm
        return cos_angle >= math.cos(cfg.facing_half_angle)
    logger.warning("no predicate for relation %r; counting as failed", relation)
    return False


def _supported_on(child, supporter, cfg: MetricsConfig) -> bool:
    child_fp = geometry.footprint_of(child)
    supporter_fp = geometry.footprint_of(supporter)
    if not supporter_fp.contains_point(child_fp.center):
        return False
    return abs(child.pose.position[2] - object_top(supporter)) <= cfg.support_z_tolerance


def spatial_relation(
    pred: SceneProgram, annotation: Annotation, cfg: Optional[MetricsConfig] = None
) -> Tuple[float, List[dict]]:
    """Fraction of annotated relations satisfied by the matched objects."""
    cfg = cfg or MetricsConfig()
    if not annotation.relations:
        return 1.0, []
    matches = match_objects(pred, annotation.gt_program, annotation.category_aliases)
    passed = 0
    evidence = []
    for subject, relation, obj in annotation.relations:
        ps, po = matches.get(subject), matches.get(obj)
        ok = (
            ps is not None
            and po is not None
            and _check_relation(pred, ps, relation, po, cfg)
        )
        passed += int(ok)
        evidence.append(
            {"relation": [subject, relation, obj], "matched": [ps, po], "passed": ok}
        )
    return passed / len(annotation.relations), evidence


def _yaw_difference(yaw_a: float, yaw_b: float, symmetry: str) -> float:
    delta = abs(geometry.normalize_yaw(yaw_a - yaw_b))
    if symmetry == "pi":
        delta = delta % math.pi
        return min(delta, math.pi - delta)
    if symmetry == "half_pi":
        delta = delta % (math.pi / 2.0)
        return min(delta, math.pi / 2.0 - delta)
    return delta


def rotation_accuracy(
    pred: SceneProgram, gt: SceneProgram, annotation: Optional[Annotation] = None,
    cfg: Optional[MetricsConfig] = None,
) -> Tuple[float, List[dict]]:
    """Fraction of matched objects whose yaw agrees within tolerance."""
    cfg = cfg or MetricsConfig()
    aliases = annotation.category_aliases if annotation else {}
    symmetry_map = annotation.yaw_symmetry if annotation else {}
    matches = match_objects(pred, gt, aliases)
    if not matches:
        logger.warning("rotation accuracy: no matched objects")
        return 0.0, []
    tol = math.radians(cfg.yaw_tolerance_deg)
    correct = 0
    evidence = []
    for gt_id, pred_id in sorted(matches.items()):
        gt_obj = gt.find_object(gt_id)
        pred_obj = pred.find_object(pred_id)
        symmetry = symmetry_map.get(_norm_category(gt_obj.category, aliases), "none")
        delta = _yaw_difference(pred_obj.pose.yaw, gt_obj.pose.yaw, symmetry)
        ok = delta <= tol
        correct += int(ok)
        evidence.append(
            {"gt": gt_id, "pred": pred_id, "yaw_error_rad": delta, "passed": ok}
        )
    return correct / len(matches), evidence


def support_accuracy(
    pred: SceneProgram, gt: SceneProgram, annotation: Optional[Annotation] = None,
    cfg: Optional[MetricsConfig] = None,
) -> Tuple[float, List[dict]]:
    """Fraction of annotated support pairs reproduced by the prediction."""
    cfg = cfg or MetricsConfig()
    aliases = annotation.category_aliases if annotation else {}
    pairs = [
        (s.id, s.parent)
        for s in sorted(gt.objects(), key=lambda s: s.id)
        if s.parent is not None
    ]
    if not pairs:
        return 1.0, []
    matches = match_objects(pred, gt, aliases)
    correct = 0
    evidence = []
    for child_id, supporter_id in pairs:
        pc, ps = matches.get(child_id), matches.get(supporter_id)
        ok = False
        if pc is not None and ps is not None:
            ok = _supported_on(pred.find_object(pc), pred.find_object(ps), cfg)
        correct += int(ok)
        evidence.append(
            {"gt_pair": [child_id, supporter_id], "matched": [pc, ps], "passed": ok}
        )
    return correct / len(pairs), evidence


# ---------------------------------------------------------------------------
# Execution rate
# ---------------------------------------------------------------------------


@dataclass
class ExecutionRateResult:
    available: bool
    rate: Optional[float]
    results: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"available": self.available, "rate": self.rate, "results": self.results}


def execution_rate(
    scripts: Sequence, blender_path: Optional[str] = None, timeout: float = 240.0
) -> ExecutionRateResult:
    """Run emitted scripts headlessly; fraction exiting 0 within the timeout.

    Reported unavailable (not zero) when no Blender executable is found.
    """
    binary = blender_path or shutil.which("blender")
    if binary is None:
        return ExecutionRateResult(available=False, rate=None)
    results = []
    ok = 0
    with tempfile.TemporaryDirectory(prefix="car_exec_") as tmp:
        for i, script in enumerate(scripts):
            out_png = str(Path(tmp) / f"render_{i}.png")
            cmd = [binary, "-b", "-P", str(script), "--", out_png]
            try:
                proc = subprocess.run(
                    cmd, capture_output=True, timeout=timeout, text=True
                )
                success = proc.returncode == 0
                detail = proc.stderr[-500:] if not success else ""
            except subprocess.TimeoutExpired:
                success, detail = False, "timeout"
            ok += int(success)
            results.append({"script": str(script), "ok": success, "detail": detail})
    rate = ok / len(scripts) if scripts else 1.0
    return ExecutionRateResult(available=True, rate=rate, results=results)


# ---------------------------------------------------------------------------
# Full evaluation
# ---------------------------------------------------------------------------


def evaluate(
    pred: SceneProgram,
    annotation: Annotation,
    completion: bool = True,
    cfg: Optional[MetricsConfig] = None,
) -> MetricsReport:
    cfg = cfg or MetricsConfig()
    gt = annotation.gt_program
    aliases = annotation.category_aliases
    spatial, spatial_evidence = spatial_relation(pred, annotation, cfg)
    rotation, rotation_evidence = rotation_accuracy(pred, gt, annotation, cfg)
    support, support_evidence = support_accuracy(pred, gt, annotation, cfg)
    report = MetricsReport(
        obj_recall=object_recall(pred, gt, aliases),
        func_acc=functional_accuracy(pred, annotation),
        self_overlap=self_overlap(pred),
        layout_iou=layout_iou(pred, gt, cfg.raster_cell),
        spatial_relation=spatial,
        rotation_acc=rotation,
        support_acc=support,
        completion=completion,
        evidence={
            "spatial_relation": spatial_evidence,
            "rotation_acc": rotation_evidence,
            "support_acc": support_evidence,
        },
    )
    report.validate()
    return report


TABLE_COLUMNS = (
    "obj_recall",
    "func_acc",
    "self_overlap",
    "layout_iou",
    "spatial_relation",
    "rotation_acc",
    "support_acc",
    "completion",
    "exec_rate",
    "image_similarity",
    "scene_usability",
    "aesthetic_quality",
)


def aggregate_reports(reports: Sequence[MetricsReport]) -> Dict[str, Optional[float]]:
    """Uniform per-scene average of every rate plus completion fraction."""
    out: Dict[str, Optional[float]] = {}
    if not reports:
        return {c: None for c in TABLE_COLUMNS}
    for name in MetricsReport.RATE_FIELDS:
        out[name] = sum(getattr(r, name) for r in reports) / len(reports)
    out["completion"] = sum(1 for r in reports if r.completion) / len(reports)
    exec_known = [r.exec_ok for r in reports if r.exec_ok is not None]
    out["exec_rate"] = (
        sum(1 for v in exec_known if v) / len(exec_known) if exec_known else None
    )
    out["image_similarity"] = None
    out["scene_usability"] = None
    out["aesthetic_quality"] = None
    return out


def render_table(aggregate: Dict[str, Optional[float]], label: str = "scenes") -> str:
    """Human-readable one-row table in the benchmark column order."""
    headers = [
        "Obj.Recall",
        "Func.Acc",
        "SelfOverlap",
        "LayoutIoU",
        "SpatialRel",
        "Rot.Acc",
        "Supp.Acc",
        "Completion",
        "ExecRate",
        "ImgSim",
        "Usability",
        "Aesthetic",
    ]
    def _fmt(value):
        return "unscored" if value is None else f"{value:.3f}"

    values = [_fmt(aggregate.get(c)) for c in TABLE_COLUMNS]
    width = max(len(h) for h in headers) + 2
    lines = [
        label,
        "".join(h.ljust(width) for h in headers),
        "".join(v.ljust(width) for v in values),
    ]
    return "\n".join(lines)


def to_csv(rows: Sequence[Tuple[str, Dict[str, Optional[float]]]]) -> str:
    """CSV in benchmark column order, one row per labeled aggregate."""
    header = "label," + ",".join(TABLE_COLUMNS)
    lines = [header]
    for label, aggregate in rows:
        cells = [label]
        for column in TABLE_COLUMNS:
            value = aggregate.get(column)
            cells.append("" if value is None else f"{value:.6f}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
