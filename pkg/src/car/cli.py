"""Command-line entry points: run, eval, ablate, preview, emit, correct, stage.

All commands are non-interactive; stdout carries only the report and
diagnostics go to stderr. Exit codes: 0 success, 2 missing or malformed
input, 3 broken configuration, 4 stage failure, 1 unexpected error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional

from . import metrics as metrics_mod
from . import sim
from .correction import CorrectionConfig, correct_placements
from .emit import EmitOptions, emit_blender_script
from .jsonio import read_json, write_json
from .memory import MemoryStore
from .model import SceneDescription
from .pipeline import Pipeline, PipelineConfig, STAGE_ORDER
from .preview import render_preview
from .program import SceneProgram
from .providers import ProviderConfigError
from .refine import LoopConfig, RefineContext, run_loop

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_STAGE = 4


class CliInputError(ValueError):
    pass


class CliConfigError(ValueError):
    pass


def _load_program(path) -> SceneProgram:
    path = Path(path)
    if not path.exists():
        raise CliInputError(f"program file not found: {path}")
    try:
        return SceneProgram.load(path)
    except Exception as exc:
        raise CliInputError(f"cannot parse program {path}: {exc}") from None


def _load_annotation(path) -> metrics_mod.Annotation:
    path = Path(path)
    if not path.exists():
        raise CliInputError(f"annotation file not found: {path}")
    try:
        return metrics_mod.Annotation.load(path)
    except Exception as exc:
        raise CliInputError(f"cannot parse annotation {path}: {exc}") from None


def build_config(args) -> PipelineConfig:
    """Flags beat the config file, the config file beats defaults."""
    file_values: Dict = {}
    if getattr(args, "config", None):
        config_path = Path(args.config)
        if not config_path.exists():
            raise CliConfigError(f"config file not found: {config_path}")
        try:
            file_values = read_json(config_path)
        except ValueError as exc:
            raise CliConfigError(f"config file is not valid JSON: {exc}") from None

    loop_values = dict(file_values.get("loop", {}))
    correction_values = dict(file_values.get("correction", {}))
    provider_values = dict(file_values.get("provider", {"kind": "scripted"}))

    if getattr(args, "provider", None):
        provider_values["kind"] = args.provider
    if getattr(args, "feedback_iters", None) is not None:
        loop_values["t_max"] = args.feedback_iters
    if getattr(args, "score_threshold", None) is not None:
        loop_values["s_star"] = args.score_threshold

    config = PipelineConfig(
        provider=provider_values,
        fixtures_root=getattr(args, "fixtures", None) or file_values.get("fixtures_root"),
        run_root=getattr(args, "out", None) or file_values.get("run_root", "run"),
        loop=LoopConfig(
            t_max=int(loop_values.get("t_max", 5)),
            s_star=float(loop_values.get("s_star", 8.5)),
        ),
        correction=CorrectionConfig(
            grid_step=float(correction_values.get("grid_step", 0.05)),
            max_radius=float(correction_values.get("max_radius", 1.5)),
            collision_scope=float(correction_values.get("collision_scope", 3.0)),
            underlay_height=float(correction_values.get("underlay_height", 0.06)),
        ),
        salience_threshold=float(file_values.get("salience_threshold", 0.5)),
        no_memory=bool(getattr(args, "no_memory", False) or file_values.get("no_memory", False)),
        preview_px_per_m=float(file_values.get("preview_px_per_m", 40.0)),
        wall_height=float(file_values.get("wall_height", 2.6)),
        asset_index=getattr(args, "assets", None) or file_values.get("asset_index"),
    )
    if config.provider.get("kind") == "scripted" and not (
        config.provider.get("fixtures_root") or config.fixtures_root
    ):
        raise CliConfigError("scripted provider needs --fixtures or fixtures_root in config")
    return config


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    config = build_config(args)
    images = [Path(p) for p in args.image]
    for image in images:
        if not image.exists():
            raise CliInputError(f"input image not found: {image}")

    def _one(image: Path) -> dict:
        scene_id = args.scene_id if (args.scene_id and len(images) == 1) else image.stem
        pipeline = Pipeline(config)
        state = pipeline.run_all(image, scene_id)
        return state.to_dict()

    if args.jobs > 1 and len(images) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            states = list(pool.map(_one, images))
    else:
        states = [_one(image) for image in images]

    print(json.dumps(states if len(states) > 1 else states[0], indent=2, sort_keys=True))
    if all(s["completed"] for s in states):
        return EXIT_OK
    return EXIT_STAGE


def cmd_eval(args) -> int:
    preds = args.pred
    gts = args.gt
    if len(preds) != len(gts):
        raise CliInputError("--pred and --gt must be given the same number of times")
    reports = []
    labels = []
    for pred_path, gt_path in zip(preds, gts):
        pred = _load_program(pred_path)
        annotation = _load_annotation(gt_path)
        report = metrics_mod.evaluate(pred, annotation)
        if args.scripts:
            result = metrics_mod.execution_rate(args.scripts, args.blender_path)
            if result.available:
                report.exec_ok = result.rate == 1.0
        reports.append(report)
        labels.append(Path(pred_path).stem)

    if len(reports) == 1:
        out_path = Path(args.out or "metrics.json")
        reports[0].save(out_path)
        aggregate = metrics_mod.aggregate_reports(reports)
        print(metrics_mod.render_table(aggregate, label=labels[0]))
        logger.info("metrics written to %s", out_path)
    else:
        rows = [
            (label, metrics_mod.aggregate_reports([report]))
            for label, report in zip(labels, reports)
        ]
        rows.append(("aggregate", metrics_mod.aggregate_reports(reports)))
        csv_text = metrics_mod.to_csv(rows)
        print(csv_text, end="")
        if args.out:
            Path(args.out).write_text(csv_text, encoding="utf-8")
    return EXIT_OK


def cmd_ablate(args) -> int:
    arms = [int(a) for a in args.arms.split(",") if a != ""]
    rows: List[dict] = []
    for arm in arms:
        ious = []
        recalls = []
        for seed in range(args.scenes):
            gt, initial = sim.make_refine_scene(seed + args.seed)
            provider = sim.SimulatedRefineProvider(gt, initial, seed=seed + args.seed)
            desc = SceneDescription(
                objects=[], room_extent=(gt.shell.width, gt.shell.depth)
            )
            from .model import SceneGraph

            ctx = RefineContext(
                scene_id=f"sim_{seed}", desc=desc, graph=SceneGraph(nodes={}, edges=[])
            )
            final, _ = run_loop(
                initial,
                ctx,
                LoopConfig(t_max=arm, s_star=args.score_threshold or 8.5),
                lambda prog, t: "mem://render",
                provider,
            )
            ious.append(metrics_mod.layout_iou(final, gt))
            recalls.append(metrics_mod.object_recall(final, gt))
        rows.append(
            {
                "arm": f"feedback x{arm}",
                "layout_iou": sum(ious) / len(ious),
                "obj_recall": sum(recalls) / len(recalls),
                "scenes": args.scenes,
            }
        )

    if args.fixtures and args.images and args.gt_dir:
        for label, no_memory in (("full memory", False), ("w/o memory", True)):
            ious, recalls = [], []
            for image in sorted(Path(args.images).glob("*.png")):
                scene_id = image.stem
                gt_path = Path(args.gt_dir) / f"{scene_id}.json"
                if not gt_path.exists():
                    continue
                config = build_config(args)
                config.no_memory = no_memory
                config.run_root = str(Path(args.out or "run_ablate") / label.replace(" ", "_"))
                pipeline = Pipeline(config)
                state = pipeline.run_all(image, scene_id)
                pred_path = Path(state.run_dir) / "out" / "final_program.json"
                if not pred_path.exists():
                    continue
                annotation = _load_annotation(gt_path)
                pred = _load_program(pred_path)
                ious.append(metrics_mod.layout_iou(pred, annotation.gt_program))
                recalls.append(
                    metrics_mod.object_recall(
                        pred, annotation.gt_program, annotation.category_aliases
                    )
                )
            if ious:
                rows.append(
                    {
                        "arm": label,
                        "layout_iou": sum(ious) / len(ious),
                        "obj_recall": sum(recalls) / len(recalls),
                        "scenes": len(ious),
                    }
                )

    print(f"{'configuration':<20}{'obj recall':>12}{'layout IoU':>12}{'scenes':>8}")
    for row in rows:
        print(
            f"{row['arm']:<20}{row['obj_recall']:>12.3f}{row['layout_iou']:>12.3f}"
            f"{row['scenes']:>8d}"
        )
    if args.report:
        write_json(args.report, rows)
    return EXIT_OK


def cmd_preview(args) -> int:
    program = _load_program(args.program)
    result = render_preview(program, args.px_per_m)
    out = Path(args.out or "preview.png")
    result.save(out, with_labels=args.labels)
    print(str(out))
    return EXIT_OK


def cmd_emit(args) -> int:
    program = _load_program(args.program)
    opts = EmitOptions(
        shim_mode=args.mode,
        output_path=args.out,
        embed_textures=args.embed_textures,
        asset_root=args.asset_root,
        texture_root=args.texture_root,
    )
    text = emit_blender_script(program, opts)
    if not args.out:
        print(text)
    else:
        print(args.out)
    return EXIT_OK


def cmd_correct(args) -> int:
    program = _load_program(args.program)
    cfg = CorrectionConfig(
        grid_step=args.grid_step, max_radius=args.max_radius, collision_scope=args.scope
    )
    corrected, report = correct_placements(program, cfg)
    out = Path(args.out or "corrected_program.json")
    corrected.save(out)
    if args.report:
        report.save(args.report)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_stage(args) -> int:
    run_dir = Path(args.run_dir)
    memory_dir = run_dir / "memory"
    if not memory_dir.exists():
        raise CliInputError(f"run directory has no memory: {memory_dir}")
    store = MemoryStore.load(memory_dir)
    config = build_config(args)
    pipeline = Pipeline(config)
    stage = args.n
    if stage not in STAGE_ORDER:
        raise CliInputError(f"unknown stage {stage!r} (valid: {', '.join(STAGE_ORDER)})")
    # Drop artifacts the stage previously wrote so the replay can append.
    store = MemoryStore(
        entries=[e for e in store.entries if e.stage != stage],
        view_table=store.view_table,
    )
    from .pipeline import StageStatus

    status = StageStatus(stage=stage, status="ok")
    runner = getattr(pipeline, f"_stage{stage}")
    try:
        store = runner(store, args.scene_id or run_dir.name, run_dir, status)
    except Exception as exc:
        print(f"stage {stage} failed: {exc}", file=sys.stderr)
        return EXIT_STAGE
    store.persist(memory_dir)
    print(json.dumps(status.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="car", description="Top-down room image to executable Blender scene."
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full pipeline on input images")
    p_run.add_argument("image", nargs="+")
    p_run.add_argument("--scene-id")
    p_run.add_argument("--config")
    p_run.add_argument("--provider", choices=["scripted", "http"])
    p_run.add_argument("--fixtures", help="fixture root for the scripted provider")
    p_run.add_argument("--assets", help="asset library index.json")
    p_run.add_argument("--out", help="run directory root")
    p_run.add_argument("--no-memory", action="store_true")
    p_run.add_argument("--feedback-iters", type=int, choices=[0, 3, 5, 10])
    p_run.add_argument("--score-threshold", type=float)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="evaluate a program against an annotation")
    p_eval.add_argument("--pred", action="append", required=True)
    p_eval.add_argument("--gt", action="append", required=True)
    p_eval.add_argument("--out")
    p_eval.add_argument("--scripts", nargs="*", default=None)
    p_eval.add_argument("--blender-path")
    p_eval.set_defaults(func=cmd_eval)

    p_ablate = sub.add_parser("ablate", help="feedback-iteration and memory ablations")
    p_ablate.add_argument("--arms", default="0,3,5,10")
    p_ablate.add_argument("--scenes", type=int, default=20)
    p_ablate.add_argument("--seed", type=int, default=0)
    p_ablate.add_argument("--score-threshold", type=float)
    p_ablate.add_argument("--fixtures", help="fixture root (enables the memory arms)")
    p_ablate.add_argument("--images", help="fixture image directory")
    p_ablate.add_argument("--gt-dir", help="annotation directory")
    p_ablate.add_argument("--assets")
    p_ablate.add_argument("--config")
    p_ablate.add_argument("--out")
    p_ablate.add_argument("--report", help="write the comparison rows as JSON")
    p_ablate.set_defaults(func=cmd_ablate)

    p_preview = sub.add_parser("preview", help="render a top-down preview image")
    p_preview.add_argument("program")
    p_preview.add_argument("--out")
    p_preview.add_argument("--px-per-m", type=float, default=50.0)
    p_preview.add_argument("--labels", action="store_true")
    p_preview.set_defaults(func=cmd_preview)

    p_emit = sub.add_parser("emit", help="emit an executable Blender script")
    p_emit.add_argument("program")
    p_emit.add_argument("--out")
    p_emit.add_argument("--mode", choices=["self_contained", "shim_import"],
                        default="self_contained")
    p_emit.add_argument("--embed-textures", action="store_true")
    p_emit.add_argument("--asset-root")
    p_emit.add_argument("--texture-root")
    p_emit.set_defaults(func=cmd_emit)

    p_correct = sub.add_parser("correct", help="run the placement corrector")
    p_correct.add_argument("program")
    p_correct.add_argument("--out")
    p_correct.add_argument("--report")
    p_correct.add_argument("--grid-step", type=float, default=0.05)
    p_correct.add_argument("--max-radius", type=float, default=1.5)
    p_correct.add_argument("--scope", type=float, default=3.0)
    p_correct.set_defaults(func=cmd_correct)

    p_stage = sub.add_parser("stage", help="replay one stage of a persisted run")
    p_stage.add_argument("n")
    p_stage.add_argument("--run-dir", required=True)
    p_stage.add_argument("--scene-id")
    p_stage.add_argument("--config")
    p_stage.add_argument("--provider", choices=["scripted", "http"])
    p_stage.add_argument("--fixtures")
    p_stage.add_argument("--assets")
    p_stage.set_defaults(func=cmd_stage)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CliConfigError, ProviderConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - last resort
        logger.exception("unexpected failure")
        print(f"unexpected error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
