import json
import re
from pathlib import Path

import pytest

from car import metrics as metrics_mod
from car.jsonio import read_json
from car.memory import MemoryStore
from car.pipeline import Pipeline, PipelineConfig, STAGE_ORDER, shell_from_description
from car.program import SceneProgram, geometry_hash


def normalized_tree(root: Path):
    """File tree as {relpath: bytes}, with volatile JSON fields masked."""
    out = {}
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        data = path.read_bytes()
        if path.suffix == ".json":
            text = data.decode("utf-8")
            text = re.sub(r'"wall_clock": "[^"]*"', '"wall_clock": "MASKED"', text)
            # The config snapshot names the run directory itself.
            text = re.sub(r'"run_(root|dir)": "[^"]*"', '"run_\\1": "MASKED"', text)
            data = text.encode("utf-8")
        out[str(path.relative_to(root))] = data
    return out


@pytest.fixture(scope="module")
def bedroom_run(fixtures_root, scripted_config, tmp_path_factory):
    run_root = tmp_path_factory.mktemp("run")
    config = scripted_config(run_root)
    pipeline = Pipeline(config)
    state = pipeline.run_all(fixtures_root / "images" / "bedroom.png", "bedroom")
    return state, run_root / "bedroom"


class TestRunAll:
    def test_all_stages_ok(self, bedroom_run):
        state, _ = bedroom_run
        assert state.completed
        assert [s.status for s in state.stages] == ["ok"] * len(STAGE_ORDER)

    def test_run_directory_layout(self, bedroom_run):
        _, run_dir = bedroom_run
        assert (run_dir / "memory" / "index.json").exists()
        assert (run_dir / "out" / "final_program.json").exists()
        assert (run_dir / "out" / "scene.blend.py").exists()
        assert (run_dir / "out" / "stage3_trace.json").exists()
        assert (run_dir / "out" / "stage10_correction.json").exists()
        assert (run_dir / "report.json").exists()
        assert list((run_dir / "previews").glob("stage3_iter*.png"))
        assert (run_dir / "previews" / "final.png").exists()

    def test_stage_files_match_memory(self, bedroom_run):
        _, run_dir = bedroom_run
        store = MemoryStore.load(run_dir / "memory")
        desc_entry = store.latest("1", "description")
        on_disk = read_json(run_dir / "out" / "stage1_description.json")
        assert desc_entry.payload == on_disk

    def test_memory_has_one_artifact_per_stage_type(self, bedroom_run):
        _, run_dir = bedroom_run
        store = MemoryStore.load(run_dir / "memory")
        keys = [(e.stage, e.artifact_type) for e in store.entries]
        assert len(keys) == len(set(keys))
        assert ("10", "scene_program") in keys
        assert ("10", "report") in keys

    def test_adversarial_edges_dropped_exactly(self, bedroom_run):
        _, run_dir = bedroom_run
        dropped = read_json(run_dir / "out" / "stage2_dropped_edges.json")
        reasons = sorted(d["reason"] for d in dropped)
        assert reasons == [
            "duplicate",
            "relation between architectural elements",
            "unknown endpoint",
        ]
        graph = read_json(run_dir / "out" / "stage2_graph.json")
        from car.model import SceneGraph

        SceneGraph.from_dict(graph).validate()

    def test_final_program_sound(self, bedroom_run):
        from car.correction import correct_placements

        _, run_dir = bedroom_run
        final = SceneProgram.load(run_dir / "out" / "final_program.json")
        again, report = correct_placements(final)
        assert not report.changed

    def test_final_program_matches_reference_golden(self, bedroom_run, fixtures_root):
        _, run_dir = bedroom_run
        produced = (run_dir / "out" / "final_program.json").read_bytes()
        golden = (fixtures_root / "golden" / "bedroom_final_program.json").read_bytes()
        assert produced == golden

    def test_geometry_hash_stable_across_decor_stages(self, bedroom_run):
        from car.program import parse

        _, run_dir = bedroom_run
        store = MemoryStore.load(run_dir / "memory")

        def program_of(stage):
            return parse(json.dumps(store.latest(stage, "scene_program").payload))

        h6 = geometry_hash(program_of("6"))
        h8 = geometry_hash(program_of("8"))
        h9 = geometry_hash(program_of("9"))
        assert h6 == h8 == h9

    def test_halt_and_preserve_on_broken_stage(self, fixtures_root, scripted_config, tmp_path):
        import shutil

        broken_fixtures = tmp_path / "providers"
        shutil.copytree(fixtures_root / "providers", broken_fixtures)
        stage5 = broken_fixtures / "bedroom" / "stage5.json"
        stage5.write_text('{"profiles": [], "room_style": {"palette": [], "style": "s", "mood": "m", "lighting": "l"}}')
        config = PipelineConfig(
            provider={"kind": "scripted", "fixtures_root": str(broken_fixtures)},
            run_root=str(tmp_path / "run"),
            asset_index=str(fixtures_root / "assets" / "index.json"),
        )
        state = Pipeline(config).run_all(fixtures_root / "images" / "bedroom.png", "bedroom")
        statuses = {s.stage: s.status for s in state.stages}
        assert statuses["1"] == statuses["4"] == "ok"
        assert statuses["5"] == "failed"
        assert statuses["6"] == statuses["8"] == statuses["10"] == "skipped"
        assert not state.completed
        # Partial run directory preserved.
        assert (tmp_path / "run" / "bedroom" / "memory" / "index.json").exists()
        assert (tmp_path / "run" / "bedroom" / "report.json").exists()

    def test_missing_image_raises(self, scripted_config, tmp_path):
        pipeline = Pipeline(scripted_config(tmp_path))
        with pytest.raises(FileNotFoundError):
            pipeline.run_all(tmp_path / "nope.png", "bedroom")


class TestDeterminism:
    def test_consecutive_runs_identical_modulo_timestamps(
        self, fixtures_root, scripted_config, tmp_path
    ):
        trees = []
        for name in ("a", "b"):
            config = scripted_config(tmp_path / name)
            Pipeline(config).run_all(fixtures_root / "images" / "studio.png", "studio")
            trees.append(normalized_tree(tmp_path / name / "studio"))
        assert trees[0].keys() == trees[1].keys()
        for rel in trees[0]:
            assert trees[0][rel] == trees[1][rel], rel


class TestMemoryViews:
    def test_view_manifest_matches_golden(self, bedroom_run, repo_root):
        state, _ = bedroom_run
        manifest = {s.stage: s.inputs for s in state.stages}
        golden_path = repo_root / "fixtures" / "golden" / "bedroom_view_manifest.json"
        golden = read_json(golden_path)
        assert manifest == golden

    def test_profiles_cover_every_placed_object(self, bedroom_run):
        _, run_dir = bedroom_run
        store = MemoryStore.load(run_dir / "memory")
        layout = store.latest("4", "layout_program").payload
        placed = {
            s["id"] for s in layout["statements"]
            if s["kind"] in ("proxy", "assembly", "asset_instance")
        }
        profiles = store.latest("5", "profile_set").payload["profiles"]
        assert {p["id"] for p in profiles} == placed


class TestAblation:
    def test_no_memory_never_beats_full(self, fixtures_root, scripted_config, tmp_path):
        results = {}
        for mode in (False, True):
            config = scripted_config(tmp_path / f"mode_{mode}", no_memory=mode)
            for scene_id in ("bedroom", "studio", "office"):
                state = Pipeline(config).run_all(
                    fixtures_root / "images" / f"{scene_id}.png", scene_id
                )
                assert state.completed, (mode, scene_id)
                pred = SceneProgram.load(
                    Path(state.run_dir) / "out" / "final_program.json"
                )
                annotation = metrics_mod.Annotation.load(
                    fixtures_root / "gt" / f"{scene_id}.json"
                )
                results[(scene_id, mode)] = (
                    metrics_mod.object_recall(
                        pred, annotation.gt_program, annotation.category_aliases
                    ),
                    metrics_mod.layout_iou(pred, annotation.gt_program),
                )
        for scene_id in ("bedroom", "studio", "office"):
            full = results[(scene_id, False)]
            ablated = results[(scene_id, True)]
            assert ablated[0] <= full[0], scene_id
            assert ablated[1] <= full[1], scene_id

    def test_stage5_inputs_differ_under_ablation(
        self, fixtures_root, scripted_config, tmp_path
    ):
        manifests = {}
        for mode in (False, True):
            config = scripted_config(tmp_path / f"m_{mode}", no_memory=mode)
            state = Pipeline(config).run_all(
                fixtures_root / "images" / "office.png", "office"
            )
            manifests[mode] = {s.stage: s.inputs for s in state.stages}
        full_stage5 = {tuple(k[:2]) for k in manifests[False]["5"]}
        ablated_stage5 = {tuple(k[:2]) for k in manifests[True]["5"]}
        assert ("1", "description") in full_stage5
        assert ("1", "description") not in ablated_stage5
        assert ("4", "layout_program") in ablated_stage5


class TestShellConstruction:
    def test_shell_from_description(self, fixtures_root):
        from car.model import SceneDescription

        payload = read_json(fixtures_root / "providers" / "bedroom" / "stage1.json")
        desc = SceneDescription.from_dict(payload)
        shell = shell_from_description(desc)
        assert shell.width == 4.0 and shell.depth == 5.0
        assert {w.id for w in shell.walls} == {"wall_s", "wall_e", "wall_n", "wall_w"}
        kinds = sorted(c.kind for c in shell.cutouts)
        assert kinds == ["door", "window"]
        door = next(c for c in shell.cutouts if c.kind == "door")
        assert door.wall == "wall_s"
        assert door.center == pytest.approx(2.2)
