"""Render-critique-revise refinement of the major layout.

Each iteration renders the current program top-down, asks the critic for a
score plus concrete issues, sanitizes those issues against the scene
description and graph (the critic may not touch architecture or invent
objects), and applies provider-proposed structured edits. A revision that
fails IR validation is skipped and the previous program kept, so every
program in the trace is well-formed. The loop stops at the score threshold
or after the configured iteration budget.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

from .jsonio import write_json
from .model import SceneDescription, SceneGraph
from .program import ParseError, LinkError, ConflictError, Pose, Proxy, SceneProgram
from .program import geometry_hash, parse, serialize
from .providers import Provider, ProviderRequest, build_prompt

logger = logging.getLogger(__name__)

DEFAULT_SCORE_THRESHOLD = 8.5
DEFAULT_MAX_ITERATIONS = 5


class EditError(ValueError):
    """A structured edit cannot be applied to the current program."""


class LoopError(RuntimeError):
    def __init__(self, message: str, trace: "LoopTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class Issue:
    kind: str
    subjects: Tuple[str, ...]
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "subjects": list(self.subjects), "note": self.note}

    @classmethod
    def from_dict(cls, d: dict) -> "Issue":
        return cls(kind=d["kind"], subjects=tuple(d["subjects"]), note=d.get("note", ""))


@dataclass(frozen=True)
class Critique:
    score: float
    issues: Tuple[Issue, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "issues", tuple(self.issues))
        if not 0.0 <= self.score <= 10.0:
            raise ValueError(f"critique score {self.score} outside [0, 10]")

    def to_dict(self) -> dict:
        return {"score": self.score, "issues": [i.to_dict() for i in self.issues]}

    @classmethod
    def from_payload(cls, d: dict) -> "Critique":
        return cls(
            score=float(d["score"]),
            issues=tuple(Issue.from_dict(i) for i in d.get("issues", [])),
        )


@dataclass(frozen=True)
class DroppedIssue:
    issue: Issue
    reason: str

    def to_dict(self) -> dict:
        return {"issue": self.issue.to_dict(), "reason": self.reason}


@dataclass(frozen=True)
class LoopConfig:
    t_max: int = DEFAULT_MAX_ITERATIONS
    s_star: float = DEFAULT_SCORE_THRESHOLD

    def __post_init__(self):
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")


def sanitize(
    critique: Critique, desc: SceneDescription, graph: SceneGraph
) -> Tuple[Critique, List[DroppedIssue]]:
    """Filter critic feedback that the pipeline must not act on.

    Dropped: issues naming ids that exist nowhere in the scene state,
    issues whose primary subject is an architectural element, and
    overlap/relation complaints between an object and its own supporter
    (a child sitting on its parent is the intended arrangement).
    """
    known = {o.id for o in desc.objects} | set(graph.nodes)
    arch = {nid for nid, node in graph.nodes.items() if node.kind == "arch"}
    arch.update(a.id for a in desc.architecture)
    parent_pairs = {
        frozenset((e.src, e.dst))
        for e in graph.edges
        if e.relation in ("parent_of", "child_of")
    }
    parent_pairs.update(
        frozenset((o.id, o.parent)) for o in desc.objects if o.parent is not None
    )

    kept: List[Issue] = []
    dropped: List[DroppedIssue] = []
    for issue in critique.issues:
        unknown = [s for s in issue.subjects if s != "unknown" and s not in known]
        if unknown:
            dropped.append(DroppedIssue(issue, f"unknown ids: {sorted(unknown)}"))
            continue
        if issue.subjects and issue.subjects[0] in arch:
            dropped.append(DroppedIssue(issue, "targets an architectural element"))
            continue
        if issue.kind in ("overlap", "relation_error") and len(issue.subjects) >= 2:
            pairs = {
                frozenset((a, b))
                for i, a in enumerate(issue.subjects)
                for b in issue.subjects[i + 1 :]
            }
            if pairs & parent_pairs:
                dropped.append(DroppedIssue(issue, "contradicts the support hierarchy"))
                continue
        kept.append(issue)
    return Critique(score=critique.score, issues=tuple(kept)), dropped


# ---------------------------------------------------------------------------
# Structured edits
# ---------------------------------------------------------------------------


def apply_edits(program: SceneProgram, edits: Sequence[dict]) -> SceneProgram:
    """Apply move/rotate/resize/add/remove edits, all-or-nothing."""
    from dataclasses import replace as _replace

    statements = list(program.statements)

    def _find(object_id: str) -> int:
        for i, s in enumerate(statements):
            if s.kind in ("proxy", "assembly", "asset_instance") and s.id == object_id:
                return i
        raise EditError(f"edit references unknown object {object_id!r}")

    for edit in edits:
        op = edit["op"]
        object_id = edit["id"]
        if op == "move":
            i = _find(object_id)
            s = statements[i]
            statements[i] = _replace(
                s, pose=Pose(position=tuple(edit["position"]), yaw=s.pose.yaw)
            )
        elif op == "rotate":
            i = _find(object_id)
            s = statements[i]
            statements[i] = _replace(
                s, pose=Pose(position=s.pose.position, yaw=float(edit["yaw"]))
            )
        elif op == "resize":
            i = _find(object_id)
            s = statements[i]
            if s.kind != "proxy":
                raise EditError(f"resize only applies to proxies, not {s.kind}")
            size = tuple(float(v) for v in edit["size"])
            if min(size) <= 0:
                raise EditError(f"resize of {object_id!r} has non-positive size")
            statements[i] = _replace(s, size=size)
        elif op == "add":
            if any(
                s.kind in ("proxy", "assembly", "asset_instance") and s.id == object_id
                for s in statements
            ):
                raise EditError(f"add collides with existing id {object_id!r}")
            try:
                statements.append(
                    Proxy(
                        id=object_id,
                        category=edit["category"],
                        pose=Pose(
                            position=tuple(edit["position"]),
                            yaw=float(edit.get("yaw", 0.0)),
                        ),
                        size=tuple(float(v) for v in edit["size"]),
                        parent=edit.get("parent"),
                        placement_type=edit.get("placement_type", "floor"),
                    )
                )
            except KeyError as exc:
                raise EditError(f"add of {object_id!r} missing field {exc}") from None
        elif op == "remove":
            i = _find(object_id)
            del statements[i]
            statements = [
                s
                for s in statements
                if not (
                    s.kind in ("material", "texture")
                    and s.target.split("/", 1)[0] == object_id
                )
            ]
        else:
            raise EditError(f"unknown edit op {op!r}")
    return SceneProgram(shell=program.shell, statements=statements, version=program.version)


# ---------------------------------------------------------------------------
# The loop
# ---------------------------------------------------------------------------


@dataclass
class IterationRecord:
    index: int
    render_ref: str
    critique: Critique
    sanitized: Critique
    dropped: List[DroppedIssue]
    program_hash: str
    score: float
    revision_applied: bool
    revision_valid: bool

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "render_ref": self.render_ref,
            "critique": self.critique.to_dict(),
            "sanitized": self.sanitized.to_dict(),
            "dropped": [d.to_dict() for d in self.dropped],
            "program_hash": self.program_hash,
            "score": self.score,
            "revision_applied": self.revision_applied,
            "revision_valid": self.revision_valid,
        }


@dataclass
class LoopTrace:
    iterations: List[IterationRecord] = field(default_factory=list)
    stopped_by_score: bool = False

    def to_dict(self) -> dict:
        return {
            "iterations": [r.to_dict() for r in self.iterations],
            "stopped_by_score": self.stopped_by_score,
        }

    def save(self, path) -> None:
        write_json(path, self.to_dict())


@dataclass
class RefineContext:
    scene_id: str
    desc: SceneDescription
    graph: SceneGraph
    prompt_slots: Dict[str, str] = field(default_factory=dict)


Renderer = Callable[[SceneProgram, int], str]


def run_loop(
    initial: SceneProgram,
    ctx: RefineContext,
    cfg: LoopConfig,
    renderer: Renderer,
    provider: Provider,
) -> Tuple[SceneProgram, LoopTrace]:
    """Drive render -> critique -> sanitize -> revise until good or bored.

    Stops at the first iteration whose score reaches ``cfg.s_star``,
    otherwise runs exactly ``cfg.t_max`` iterations. With ``t_max == 0``
    the initial program is returned untouched.
    """
    program = initial
    trace = LoopTrace()
    for t in range(1, cfg.t_max + 1):
        try:
            render_ref = renderer(program, t)
        except Exception as exc:
            raise LoopError(f"renderer failed at iteration {t}: {exc}", trace) from exc

        critique_resp = provider.call(
            ProviderRequest(
                stage="3_critique",
                scene_id=ctx.scene_id,
                prompt=build_prompt("3_critique", {"iteration": str(t), **ctx.prompt_slots}),
                response_schema="critique",
                images=(render_ref,),
                iteration=t,
            )
        )
        critique = Critique.from_payload(critique_resp.payload)
        sanitized, dropped = sanitize(critique, ctx.desc, ctx.graph)
        record = IterationRecord(
            index=t,
            render_ref=render_ref,
            critique=critique,
            sanitized=sanitized,
            dropped=dropped,
            program_hash=geometry_hash(program),
            score=critique.score,
            revision_applied=False,
            revision_valid=True,
        )
        trace.iterations.append(record)

        if critique.score >= cfg.s_star:
            trace.stopped_by_score = True
            break

        edits_resp = provider.call(
            ProviderRequest(
                stage="3_revise",
                scene_id=ctx.scene_id,
                prompt=build_prompt(
                    "3_revise",
                    {"critique": str(sanitized.to_dict()), **ctx.prompt_slots},
                ),
                response_schema="edits",
                iteration=t,
            )
        )
        try:
            candidate = apply_edits(program, edits_resp.payload["edits"])
            candidate = parse(serialize(candidate))  # full IR re-validation
        except (EditError, ParseError, LinkError, ConflictError) as exc:
            logger.warning("iteration %d revision rejected: %s", t, exc)
            record.revision_applied = True
            record.revision_valid = False
            continue
        record.revision_applied = True
        program = candidate
    return program, trace
