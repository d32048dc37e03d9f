"""Seeded simulation harness: synthetic scenes and a noisy scripted critic.

Used by the ablation command and the acceptance suite to measure the
refinement loop's direction (more feedback iterations should not hurt) and
to stress the placement corrector with randomized violation injection,
all without any live model.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import replace
from typing import List, Optional, Tuple

from . import geometry
from .program import Pose, Proxy, SceneProgram, make_shell
from .providers import Provider, ProviderRequest

DISPLACEMENT_TOL = 0.05


def _disjoint_layout(
    rng: random.Random, shell, count: int, size_range=(0.5, 1.5)
) -> List[Proxy]:
    """Rejection-sample non-overlapping floor boxes inside the shell."""
    placed: List[Proxy] = []
    footprints: List[geometry.Footprint] = []
    attempts = 0
    while len(placed) < count and attempts < 4000:
        attempts += 1
        sx = rng.uniform(*size_range)
        sy = rng.uniform(*size_range)
        sz = rng.uniform(0.4, 1.2)
        yaw = rng.choice([0.0, math.pi / 2.0, rng.uniform(-math.pi, math.pi)])
        half = geometry.Footprint((0, 0), (sx / 2, sy / 2), yaw).aabb_half_extent()
        if 2 * half[0] >= shell.width or 2 * half[1] >= shell.depth:
            continue
        cx = rng.uniform(half[0], shell.width - half[0])
        cy = rng.uniform(half[1], shell.depth - half[1])
        fp = geometry.Footprint((cx, cy), (sx / 2, sy / 2), yaw)
        if any(not geometry.footprints_disjoint(fp, other, gap_tol=-0.05) for other in footprints):
            continue
        name = f"box_{len(placed):02d}"
        placed.append(
            Proxy(
                id=name,
                category=f"crate_{len(placed) % 5}",
                pose=Pose(position=(cx, cy, 0.0), yaw=yaw),
                size=(sx, sy, sz),
            )
        )
        footprints.append(fp)
    return placed


def make_refine_scene(seed: int, count: Optional[int] = None) -> Tuple[SceneProgram, SceneProgram]:
    """(ground truth, perturbed initial) program pair for loop experiments."""
    rng = random.Random(seed)
    width = rng.uniform(6.0, 9.0)
    depth = rng.uniform(6.0, 9.0)
    shell = make_shell(round(width, 2), round(depth, 2))
    count = count if count is not None else rng.randint(6, 10)
    gt_objects = _disjoint_layout(rng, shell, count)
    gt = SceneProgram(shell=shell, statements=list(gt_objects))

    noisy = []
    for proxy in gt_objects:
        dx = rng.gauss(0.0, 0.45)
        dy = rng.gauss(0.0, 0.45)
        dyaw = rng.gauss(0.0, 0.3)
        x, y, z = proxy.pose.position
        noisy.append(
            Proxy(
                id=proxy.id,
                category=proxy.category,
                pose=Pose(position=(x + dx, y + dy, z), yaw=proxy.pose.yaw + dyaw),
                size=proxy.size,
            )
        )
    initial = SceneProgram(shell=shell, statements=noisy)
    return gt, initial


def make_corrector_scene(
    seed: int, count: Optional[int] = None
) -> Tuple[SceneProgram, SceneProgram]:
    """(feasible layout, violated layout) pair for corrector experiments.

    Violations are injected within the corrector's default search radius:
    some boxes are pushed partly out of the room, others onto a neighbor.
    """
    rng = random.Random(seed ^ 0x5EED)
    shell = make_shell(round(rng.uniform(7.0, 10.0), 2), round(rng.uniform(7.0, 10.0), 2))
    count = count if count is not None else rng.randint(5, 15)
    clean_objects = _disjoint_layout(rng, shell, count)
    clean = SceneProgram(shell=shell, statements=list(clean_objects))

    violated = list(clean_objects)
    indices = list(range(len(violated)))
    rng.shuffle(indices)
    n_boundary = max(1, len(indices) // 4)
    n_overlap = max(1, len(indices) // 4)
    for idx in indices[:n_boundary]:
        proxy = violated[idx]
        x, y, z = proxy.pose.position
        half = geometry.footprint_of(proxy).aabb_half_extent()
        side = rng.choice(["w", "e", "s", "n"])
        bump = rng.uniform(0.05, 0.5)
        if side == "w":
            x = half[0] - bump
        elif side == "e":
            x = shell.width - half[0] + bump
        elif side == "s":
            y = half[1] - bump
        else:
            y = shell.depth - half[1] + bump
        violated[idx] = Proxy(
            id=proxy.id, category=proxy.category,
            pose=Pose(position=(x, y, z), yaw=proxy.pose.yaw), size=proxy.size,
        )
    for idx in indices[n_boundary : n_boundary + n_overlap]:
        proxy = violated[idx]
        other = violated[indices[(indices.index(idx) + 1) % len(indices)]]
        if other.id == proxy.id:
            continue
        ox, oy, _ = other.pose.position
        x, y, z = proxy.pose.position
        # Slide most of the way onto the neighbor.
        t = rng.uniform(0.6, 0.95)
        x = x + (ox - x) * t
        y = y + (oy - y) * t
        violated[idx] = Proxy(
            id=proxy.id, category=proxy.category,
            pose=Pose(position=(x, y, z), yaw=proxy.pose.yaw), size=proxy.size,
        )
    return clean, SceneProgram(shell=shell, statements=violated)


class SimulatedRefineProvider(Provider):
    """Noisy critic/reviser pair around a known ground-truth layout.

    Critique scores fall with mean object displacement from the ground
    truth; issues flag displaced objects with some misses and occasional
    bogus complaints. Revisions move flagged objects most of the way back,
    with fresh noise, and occasionally over-correct a settled object. The
    provider mirrors loop state by tracking its own (always valid) edits.
    """

    provider_id = "sim-noisy-critic"

    def __init__(
        self,
        gt: SceneProgram,
        initial: SceneProgram,
        seed: int = 0,
        miss_rate: float = 0.2,
        jitter: float = 0.05,
        overcorrect_rate: float = 0.1,
    ):
        self.gt = {s.id: s for s in gt.objects()}
        self.current = {s.id: s for s in initial.objects()}
        self.rng = random.Random(seed * 7919 + 13)
        self.miss_rate = miss_rate
        self.jitter = jitter
        self.overcorrect_rate = overcorrect_rate

    # -- displacement bookkeeping ---------------------------------------

    def _displacements(self):
        out = {}
        for oid, statement in self.current.items():
            gt_statement = self.gt.get(oid)
            if gt_statement is None:
                continue
            gx, gy, _ = gt_statement.pose.position
            x, y, _ = statement.pose.position
            out[oid] = math.hypot(x - gx, y - gy)
        return out

    def _score(self) -> float:
        disps = self._displacements()
        if not disps:
            return 10.0
        mean = sum(disps.values()) / len(disps)
        return max(0.0, min(10.0, 10.0 - 18.0 * mean))

    # -- provider hook ----------------------------------------------------

    def _invoke(self, request: ProviderRequest, error_note):
        if request.stage == "3_critique":
            payload = self._critique_payload()
        elif request.stage == "3_revise":
            payload = self._revise_payload()
        else:
            raise ValueError(f"simulated provider cannot serve stage {request.stage!r}")
        return json.dumps(payload, sort_keys=True), payload

    def _critique_payload(self) -> dict:
        issues = []
        for oid, disp in sorted(self._displacements().items()):
            if disp <= DISPLACEMENT_TOL:
                continue
            if self.rng.random() < self.miss_rate:
                continue
            issues.append(
                {
                    "kind": "relation_error",
                    "subjects": [oid],
                    "note": f"{oid} sits {disp:.2f} m from its arrangement in the image",
                }
            )
        if self.rng.random() < 0.15:
            issues.append(
                {
                    "kind": "missing_object",
                    "subjects": ["phantom_shelf"],
                    "note": "a shelf seems to be missing",
                }
            )
        if self.rng.random() < 0.1:
            issues.append(
                {
                    "kind": "boundary_violation",
                    "subjects": ["wall_n"],
                    "note": "the far wall looks misaligned",
                }
            )
        return {"score": round(self._score(), 3), "issues": issues}

    def _revise_payload(self) -> dict:
        edits = []
        for oid, disp in sorted(self._displacements().items()):
            if disp <= DISPLACEMENT_TOL:
                if self.rng.random() < self.overcorrect_rate:
                    statement = self.current[oid]
                    x, y, z = statement.pose.position
                    nx = x + self.rng.gauss(0.0, self.jitter)
                    ny = y + self.rng.gauss(0.0, self.jitter)
                    edits.append({"op": "move", "id": oid, "position": [nx, ny, z]})
                continue
            if self.rng.random() < self.miss_rate:
                continue
            gt_statement = self.gt[oid]
            gx, gy, gz = gt_statement.pose.position
            nx = gx + self.rng.gauss(0.0, self.jitter)
            ny = gy + self.rng.gauss(0.0, self.jitter)
            edits.append({"op": "move", "id": oid, "position": [nx, ny, gz]})
            if abs(geometry.normalize_yaw(self.current[oid].pose.yaw - gt_statement.pose.yaw)) > 0.1:
                edits.append({"op": "rotate", "id": oid, "yaw": gt_statement.pose.yaw})
        # Mirror the edits so the next critique sees the revised layout.
        for edit in edits:
            statement = self.current[edit["id"]]
            if edit["op"] == "move":
                self.current[edit["id"]] = replace(
                    statement,
                    pose=Pose(position=tuple(edit["position"]), yaw=statement.pose.yaw),
                )
            elif edit["op"] == "rotate":
                self.current[edit["id"]] = replace(
                    statement,
                    pose=Pose(position=statement.pose.position, yaw=edit["yaw"]),
                )
        return {"edits": edits}
