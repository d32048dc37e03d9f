"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one [PASS]/[FAIL] line so `pytest -s tests/test_acceptance.py`
reads as a checklist. Criteria needing Blender are skipped (reported
unavailable) when no Blender executable is installed.
"""

import json
import math
import re
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from car import geometry, metrics as metrics_mod
from car.correction import correct_placements
from car.jsonio import canonical_dumps, read_json
from car.model import SceneGraph
from car.pipeline import Pipeline
from car.program import (
    LightingPlan,
    MaterialAssign,
    MaterialSpec,
    SceneProgram,
    TextureBind,
    apply_materials,
    apply_textures,
    geometry_hash,
    render_setup,
    replace_with_parts,
    parse,
)
from car.refine import LoopConfig, RefineContext
from car.sim import SimulatedRefineProvider, make_corrector_scene, make_refine_scene

from oracles import BruteForceCorrector, mc_overlap_area, shapely_rect

SCENES = ("bedroom", "studio", "office")


def report(name: str, ok: bool, detail: str = "") -> None:
    marker = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[{marker}] {name}{suffix}")
    assert ok, f"{name}: {detail}"


def _normalized_tree(root: Path):
    out = {}
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        data = path.read_bytes()
        if path.suffix == ".json":
            text = data.decode("utf-8")
            text = re.sub(r'"wall_clock": "[^"]*"', '"wall_clock": "MASKED"', text)
            text = re.sub(r'"run_(root|dir)": "[^"]*"', '"run_\\1": "MASKED"', text)
            data = text.encode("utf-8")
        out[str(path.relative_to(root))] = data
    return out


class TestAcceptance:
    def test_full_pipeline_determinism(self, fixtures_root, scripted_config, tmp_path):
        """All 10 stages complete on 3 fixture scenes; two consecutive runs
        produce identical run directories modulo timestamps; under 60 s."""
        start = time.monotonic()
        trees = {}
        for attempt in ("first", "second"):
            config = scripted_config(tmp_path / attempt)
            for scene_id in SCENES:
                state = Pipeline(config).run_all(
                    fixtures_root / "images" / f"{scene_id}.png", scene_id
                )
                completed = state.completed
                if not completed:
                    report(
                        "full-pipeline determinism", False,
                        f"{scene_id} did not complete: "
                        f"{[(s.stage, s.status, s.error) for s in state.stages]}",
                    )
                trees[(attempt, scene_id)] = _normalized_tree(
                    tmp_path / attempt / scene_id
                )
        elapsed = time.monotonic() - start
        identical = all(
            trees[("first", s)] == trees[("second", s)] for s in SCENES
        )
        report(
            "full-pipeline determinism",
            identical and elapsed < 60.0,
            f"3 scenes x 2 runs, completion 100%, {elapsed:.1f}s",
        )

    def test_corrector_soundness_and_optimality(self):
        """100 randomized violated scenes: resolved objects satisfy
        containment and zero overlap, and every corrected position equals
        the exhaustive brute-force argmin exactly; under 30 s."""
        start = time.monotonic()
        from shapely.geometry import box as shapely_box

        for seed in range(100):
            _, violated = make_corrector_scene(seed)
            fixed, rep = correct_placements(violated)
            positions, oracle_unresolved = BruteForceCorrector(violated).run()
            if sorted(rep.unresolved) != sorted(oracle_unresolved):
                report("corrector soundness+optimality", False,
                       f"seed {seed}: unresolved sets differ")
            for oid, expected in positions.items():
                got = fixed.find_object(oid).pose.position
                if got != expected:
                    report("corrector soundness+optimality", False,
                           f"seed {seed} object {oid}: {got} != {expected}")
            room = shapely_box(0, 0, fixed.shell.width, fixed.shell.depth).buffer(
                1e-9, join_style=2
            )
            resolved = [
                s for s in fixed.objects()
                if s.placement_type == "floor"
                and s.id not in rep.unresolved
                and s.size[2] > 0.06
            ]
            for s in resolved:
                if not room.covers(shapely_rect(geometry.footprint_of(s))):
                    report("corrector soundness+optimality", False,
                           f"seed {seed}: {s.id} escapes the room")
            for i, a in enumerate(resolved):
                for b in resolved[i + 1:]:
                    inter = shapely_rect(geometry.footprint_of(a)).intersection(
                        shapely_rect(geometry.footprint_of(b))
                    ).area
                    if inter > 1e-9:
                        report("corrector soundness+optimality", False,
                               f"seed {seed}: {a.id} overlaps {b.id} by {inter}")
        elapsed = time.monotonic() - start
        report(
            "corrector soundness+optimality",
            elapsed < 30.0,
            f"100 scenes, exact oracle agreement, {elapsed:.1f}s",
        )

    def test_corrector_idempotence(self):
        """Second correction pass reports zero changes on all 100 scenes."""
        for seed in range(100):
            _, violated = make_corrector_scene(seed)
            fixed, _ = correct_placements(violated)
            _, second = correct_placements(fixed)
            if second.changed:
                report("corrector idempotence", False,
                       f"seed {seed}: {second.to_dict()}")
        report("corrector idempotence", True, "100 scenes, second pass empty")

    def test_pass_safety(self):
        """50 randomized programs: geometry hash unchanged across the
        material/texture/render passes; part replacement preserves poses."""
        import random

        from car.program import Part, Pose, Proxy, make_shell

        for seed in range(50):
            rng = random.Random(seed)
            program = SceneProgram(shell=make_shell(rng.uniform(4, 8), rng.uniform(4, 8)))
            for i in range(rng.randint(1, 8)):
                program.statements.append(
                    Proxy(
                        id=f"obj{i}", category=rng.choice(["bed", "desk", "rug"]),
                        pose=Pose(
                            (rng.uniform(1, 3), rng.uniform(1, 3), 0.0),
                            rng.uniform(-math.pi, math.pi),
                        ),
                        size=(rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5),
                              rng.uniform(0.2, 2.0)),
                    )
                )
            before = geometry_hash(program)
            staged = apply_materials(
                program,
                [MaterialAssign("obj0", MaterialSpec("wood", (0.4, 0.3, 0.2)))],
            )
            staged = apply_textures(
                staged, [TextureBind("obj0", "builtin:checker", uv={})]
            )
            staged = render_setup(staged, LightingPlan())
            if geometry_hash(staged) != before:
                report("pass safety", False, f"seed {seed}: geometry hash drifted")
            mapping = {
                "obj0": [
                    Part("body", "box", program.find_object("obj0").size, (0, 0, 0.1)),
                    Part("cap", "cylinder", (0.1, 0.1, 0.1), (0, 0, 0.6)),
                ]
            }
            replaced, _ = replace_with_parts(program, mapping)
            for s in program.objects():
                if replaced.find_object(s.id).pose != s.pose:
                    report("pass safety", False, f"seed {seed}: pose of {s.id} changed")
        report("pass safety", True, "50 programs, hash + pose preserved")

    def test_geometry_kernel(self):
        """overlap_area tracks the Monte-Carlo oracle within 1e-3*min-area
        on 1000 random oriented pairs; symmetry and self-area exact."""
        rng = np.random.default_rng(20240809)
        worst = 0.0
        for _ in range(1000):
            a = geometry.Footprint(
                (rng.uniform(-2, 2), rng.uniform(-2, 2)),
                (rng.uniform(0.1, 1.2), rng.uniform(0.1, 1.2)),
                rng.uniform(-math.pi, math.pi),
            )
            b = geometry.Footprint(
                (rng.uniform(-2, 2), rng.uniform(-2, 2)),
                (rng.uniform(0.1, 1.2), rng.uniform(0.1, 1.2)),
                rng.uniform(-math.pi, math.pi),
            )
            exact = geometry.overlap_area(a, b)
            estimate = mc_overlap_area(a, b, rng)
            tolerance = 1e-3 * min(a.area(), b.area())
            if abs(exact - estimate) > tolerance:
                report("geometry kernel", False,
                       f"MC disagrees by {abs(exact - estimate):.2e} > {tolerance:.2e}")
            worst = max(worst, abs(exact - estimate) / tolerance)
            if geometry.overlap_area(b, a) != pytest.approx(exact, abs=1e-12):
                report("geometry kernel", False, "symmetry identity broken")
            if geometry.overlap_area(a, a) != pytest.approx(a.area(), rel=1e-12):
                report("geometry kernel", False, "self-area identity broken")
        report("geometry kernel", True,
               f"1000 pairs, worst MC deviation {worst:.2f} of tolerance")

    def test_metrics_sanity(self, fixtures_root):
        """Identities, analytic IoU agreement, range checks on 100 random
        pairs, and exact reproduction of the golden metrics report."""
        import random

        from car.program import Pose, Proxy, make_shell

        gt = SceneProgram(shell=make_shell(4, 4))
        gt.statements.append(
            Proxy(id="a", category="bed", pose=Pose((1.5, 2, 0), 0.35), size=(1.4, 2, 0.5))
        )
        if metrics_mod.layout_iou(gt, gt) != 1.0:
            report("metrics sanity", False, "layout_iou(gt, gt) != 1")
        axis_gt = SceneProgram(shell=make_shell(4, 4))
        axis_gt.statements.append(
            Proxy(id="a", category="x", pose=Pose((1, 1, 0)), size=(2, 2, 1))
        )
        axis_pred = SceneProgram(shell=make_shell(4, 4))
        axis_pred.statements.append(
            Proxy(id="a", category="x", pose=Pose((2, 1, 0)), size=(2, 2, 1))
        )
        iou = metrics_mod.layout_iou(axis_pred, axis_gt)
        if abs(iou - 1 / 3) > 0.01:
            report("metrics sanity", False, f"analytic IoU case off: {iou}")
        disjoint = SceneProgram(shell=make_shell(6, 6))
        for i in range(3):
            disjoint.statements.append(
                Proxy(id=f"d{i}", category="x", pose=Pose((1 + 2 * i, 1, 0)), size=(1, 1, 1))
            )
        if metrics_mod.self_overlap(disjoint) != 0.0:
            report("metrics sanity", False, "disjoint self-overlap nonzero")

        rng = random.Random(77)
        for _ in range(100):
            def scene():
                p = SceneProgram(shell=make_shell(rng.uniform(3, 6), rng.uniform(3, 6)))
                for i in range(rng.randint(0, 6)):
                    p.statements.append(
                        Proxy(
                            id=f"o{i}", category=rng.choice(["bed", "desk", "chair"]),
                            pose=Pose(
                                (rng.uniform(0.5, 2.5), rng.uniform(0.5, 2.5), 0.0),
                                rng.uniform(-math.pi, math.pi),
                            ),
                            size=(rng.uniform(0.3, 1.2), rng.uniform(0.3, 1.2),
                                  rng.uniform(0.3, 1.5)),
                        )
                    )
                return p

            rep = metrics_mod.evaluate(scene(), metrics_mod.Annotation(gt_program=scene()))
            rep.validate()

        pred = SceneProgram.load(fixtures_root / "metrics_pair" / "pred.json")
        annotation = metrics_mod.Annotation.load(fixtures_root / "metrics_pair" / "gt.json")
        recomputed = metrics_mod.evaluate(pred, annotation)
        golden = read_json(fixtures_root / "golden" / "metrics_pair.json")
        if canonical_dumps(recomputed.to_dict()) != canonical_dumps(golden):
            report("metrics sanity", False, "golden metrics report not reproduced")
        hand = {
            "obj_recall": 4 / 5,
            "func_acc": 1 / 2,
            "self_overlap": 0.25 / 3.79,
            "spatial_relation": 1 / 3,
            "rotation_acc": 3 / 4,
            "support_acc": 0.0,
        }
        for key, value in hand.items():
            if golden[key] != pytest.approx(value, abs=1e-9):
                report("metrics sanity", False, f"{key} != hand-computed {value}")
        if golden["layout_iou"] != pytest.approx(3.4 / 3.8, abs=0.01):
            report("metrics sanity", False, "IoU drifts from rectangle arithmetic")
        report("metrics sanity", True, "identities, ranges, golden report exact")

    def test_loop_contract(self):
        """Immediate stop at s >= s*, exactly T_max = 5 when never
        satisfied, and the noisy critic's 5-iteration arm is no worse than
        the 0-iteration arm on mean layout IoU over 20 seeded scenes."""
        from car.model import SceneDescription
        from car.refine import run_loop

        gt, initial = make_refine_scene(0)
        ctx = RefineContext(
            scene_id="sim",
            desc=SceneDescription(objects=[]),
            graph=SceneGraph(nodes={}, edges=[]),
        )

        class ConstantCritic(SimulatedRefineProvider):
            def __init__(self, score, **kwargs):
                super().__init__(gt, initial, **kwargs)
                self.constant = score

            def _critique_payload(self):
                return {"score": self.constant, "issues": []}

        renderer = lambda prog, t: "mem://preview"
        _, hit = run_loop(initial, ctx, LoopConfig(t_max=5),
                          renderer, ConstantCritic(10.0))
        if len(hit.iterations) != 1 or not hit.stopped_by_score:
            report("loop contract", False, "did not stop after one good critique")
        _, miss = run_loop(initial, ctx, LoopConfig(t_max=5),
                           renderer, ConstantCritic(0.0))
        if len(miss.iterations) != 5 or miss.stopped_by_score:
            report("loop contract", False,
                   f"expected exactly 5 iterations, got {len(miss.iterations)}")

        gains = []
        for seed in range(20):
            gt_s, initial_s = make_refine_scene(seed)
            base = metrics_mod.layout_iou(initial_s, gt_s)
            provider = SimulatedRefineProvider(gt_s, initial_s, seed=seed)
            ctx_s = RefineContext(
                scene_id=f"sim{seed}",
                desc=SceneDescription(objects=[]),
                graph=SceneGraph(nodes={}, edges=[]),
            )
            final, _ = run_loop(initial_s, ctx_s, LoopConfig(t_max=5),
                                renderer, provider)
            gains.append((base, metrics_mod.layout_iou(final, gt_s)))
        mean0 = sum(g[0] for g in gains) / len(gains)
        mean5 = sum(g[1] for g in gains) / len(gains)
        report(
            "loop contract",
            mean5 >= mean0,
            f"stop-at-threshold, T_max=5, mean IoU {mean0:.3f} -> {mean5:.3f}",
        )

    def test_memory_ablation_direction(self, fixtures_root, scripted_config, tmp_path):
        """With the no-memory flag, object recall and layout IoU never
        exceed the full-memory run on any fixture scene."""
        values = {}
        for mode in (False, True):
            config = scripted_config(tmp_path / f"mode_{int(mode)}", no_memory=mode)
            for scene_id in SCENES:
                state = Pipeline(config).run_all(
                    fixtures_root / "images" / f"{scene_id}.png", scene_id
                )
                if not state.completed:
                    report("memory ablation direction", False,
                           f"{scene_id} (no_memory={mode}) did not complete")
                pred = SceneProgram.load(
                    Path(state.run_dir) / "out" / "final_program.json"
                )
                annotation = metrics_mod.Annotation.load(
                    fixtures_root / "gt" / f"{scene_id}.json"
                )
                values[(scene_id, mode)] = (
                    metrics_mod.object_recall(
                        pred, annotation.gt_program, annotation.category_aliases
                    ),
                    metrics_mod.layout_iou(pred, annotation.gt_program),
                )
        for scene_id in SCENES:
            full = values[(scene_id, False)]
            ablated = values[(scene_id, True)]
            if ablated[0] > full[0] or ablated[1] > full[1]:
                report("memory ablation direction", False,
                       f"{scene_id}: ablated {ablated} beats full {full}")
        detail = "; ".join(
            f"{s}: recall {values[(s, True)][0]:.2f}<={values[(s, False)][0]:.2f}"
            for s in SCENES
        )
        report("memory ablation direction", True, detail)

    def test_scene_graph_construction(self, fixtures_root, scripted_config, tmp_path):
        """The adversarial fixture drops exactly the invalid edge set, and
        every invertible edge carries exactly one inverse."""
        config = scripted_config(tmp_path)
        state = Pipeline(config).run_all(
            fixtures_root / "images" / "bedroom.png", "bedroom"
        )
        run_dir = Path(state.run_dir)
        dropped = read_json(run_dir / "out" / "stage2_dropped_edges.json")
        got = sorted((d["edge"]["src"], d["edge"]["dst"], d["reason"]) for d in dropped)
        expected = sorted([
            ("bed", "ghost_chair", "unknown endpoint"),
            ("wall_n", "wall_s", "relation between architectural elements"),
            ("bed", "wardrobe", "duplicate"),
        ])
        if got != expected:
            report("scene-graph construction", False, f"dropped set {got}")
        graph = SceneGraph.from_dict(read_json(run_dir / "out" / "stage2_graph.json"))
        graph.validate()  # enforces the exactly-one-inverse invariant
        from car.model import INVERSE_RELATIONS

        invertible = [
            e for e in graph.edges
            if e.provenance != "inverse" and e.relation in INVERSE_RELATIONS
        ]
        inverses = [e for e in graph.edges if e.provenance == "inverse"]
        if len(invertible) != len(inverses):
            report("scene-graph construction", False,
                   f"{len(invertible)} invertible vs {len(inverses)} inverses")
        report("scene-graph construction", True,
               f"3 invalid edges dropped, {len(inverses)} inverses paired")

    def test_execution_rate_contract(self, fixtures_root, scripted_config, tmp_path):
        """[SECONDARY] Blender execution; without Blender the primary suite
        must still run fully with execution rate reported unavailable."""
        config = scripted_config(tmp_path)
        scripts = []
        for scene_id in SCENES:
            state = Pipeline(config).run_all(
                fixtures_root / "images" / f"{scene_id}.png", scene_id
            )
            scripts.append(Path(state.run_dir) / "out" / "scene.blend.py")
        result = metrics_mod.execution_rate(scripts)
        if shutil.which("blender") is None:
            ok = not result.available and result.rate is None
            report("execution rate (no Blender)", ok,
                   "reported unavailable, primary suite unaffected")
        else:  # pragma: no cover - requires a Blender install
            report("execution rate (Blender present)", result.rate == 1.0,
                   f"rate {result.rate}")
