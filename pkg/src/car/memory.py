"""Append-only cross-stage memory with per-stage read views.

Every stage writes typed artifacts; downstream stages read only a
predefined subset of (stage, artifact_type) keys. The store never edits or
removes entries, so views computed earlier stay valid as the run grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .jsonio import read_json, write_json

ARTIFACT_TYPES = (
    "image",
    "description",
    "graph",
    "sidecar",
    "layout_program",
    "critique",
    "profile_set",
    "room_style",
    "geometry_dict",
    "scene_program",
    "report",
)

# Which (stage, artifact_type) keys each stage may read. Stage 7 is
# intentionally absent: the stage numbering jumps from 6 to 8.
DEFAULT_VIEW_TABLE: Dict[str, Tuple[Tuple[str, str], ...]] = {
    "1": (("0", "image"),),
    "2": (("0", "image"), ("1", "description")),
    "3": (("0", "image"), ("1", "description"), ("2", "graph")),
    "4": (
        ("0", "image"),
        ("1", "description"),
        ("2", "graph"),
        ("2", "sidecar"),
        ("3", "layout_program"),
    ),
    "5": (
        ("0", "image"),
        ("4", "layout_program"),
        ("1", "description"),
        ("2", "graph"),
    ),
    "6": (
        ("4", "layout_program"),
        ("5", "profile_set"),
        ("2", "sidecar"),
        ("2", "graph"),
    ),
    "8": (
        ("6", "scene_program"),
        ("6", "geometry_dict"),
        ("5", "profile_set"),
        ("5", "room_style"),
    ),
    "9": (("8", "scene_program"), ("5", "profile_set"), ("5", "room_style")),
    "10": (("0", "image"), ("9", "scene_program")),
}

INDEX_FILE = "index.json"
MEMORY_SCHEMA = "car/memory/v1"


class MemoryConflict(ValueError):
    """An entry with the same (stage, artifact_type, iteration) key exists."""


class MemoryConfigError(KeyError):
    """A stage asked for a view that the view table does not define."""


class MemoryLoadError(IOError):
    """A persisted store is missing or corrupt; message names the file."""


@dataclass(frozen=True)
class MemoryEntry:
    stage: str
    artifact_type: str
    payload: dict
    metadata: Tuple[Tuple[str, str], ...] = ()
    iteration: int = 0

    def __post_init__(self):
        if self.artifact_type not in ARTIFACT_TYPES:
            raise ValueError(f"unknown artifact type {self.artifact_type!r}")
        if isinstance(self.metadata, dict):
            object.__setattr__(self, "metadata", tuple(sorted(self.metadata.items())))

    @property
    def key(self) -> Tuple[str, str, int]:
        return (self.stage, self.artifact_type, self.iteration)

    def metadata_dict(self) -> dict:
        return dict(self.metadata)

    def file_name(self) -> str:
        return f"entry_{self.stage}_{self.artifact_type}_{self.iteration}.json"

    def to_dict(self) -> dict:
        return {
            "schema": MEMORY_SCHEMA,
            "stage": self.stage,
            "artifact_type": self.artifact_type,
            "iteration": self.iteration,
            "metadata": self.metadata_dict(),
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryEntry":
        return cls(
            stage=str(d["stage"]),
            artifact_type=d["artifact_type"],
            payload=d["payload"],
            metadata=tuple(sorted(d.get("metadata", {}).items())),
            iteration=int(d.get("iteration", 0)),
        )


@dataclass
class MemoryStore:
    entries: List[MemoryEntry] = field(default_factory=list)
    view_table: Dict[str, Tuple[Tuple[str, str], ...]] = field(
        default_factory=lambda: dict(DEFAULT_VIEW_TABLE)
    )

    def keys(self) -> set:
        return {e.key for e in self.entries}

    def append(self, entry: MemoryEntry) -> "MemoryStore":
        """Return a store extended by one entry; prior entries are shared."""
        if entry.key in self.keys():
            raise MemoryConflict(f"memory already holds entry {entry.key}")
        return MemoryStore(entries=self.entries + [entry], view_table=self.view_table)

    def view(self, stage: str) -> List[MemoryEntry]:
        """Entries visible to a stage, in insertion order."""
        if stage not in self.view_table:
            raise MemoryConfigError(f"no view defined for stage {stage!r}")
        allowed = set(self.view_table[stage])
        return [e for e in self.entries if (e.stage, e.artifact_type) in allowed]

    def latest(self, stage: str, artifact_type: str) -> Optional[MemoryEntry]:
        for entry in reversed(self.entries):
            if entry.stage == stage and entry.artifact_type == artifact_type:
                return entry
        return None

    def persist(self, directory) -> Path:
        """Write one file per entry plus an index; returns the directory."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        index = {
            "schema": MEMORY_SCHEMA,
            "entries": [],
            "view_table": {
                stage: [list(k) for k in keys] for stage, keys in self.view_table.items()
            },
        }
        for entry in self.entries:
            write_json(directory / entry.file_name(), entry.to_dict())
            index["entries"].append(
                {
                    "stage": entry.stage,
                    "artifact_type": entry.artifact_type,
                    "iteration": entry.iteration,
                    "file": entry.file_name(),
                }
            )
        write_json(directory / INDEX_FILE, index)
        return directory

    @classmethod
    def load(cls, directory) -> "MemoryStore":
        directory = Path(directory)
        index_path = directory / INDEX_FILE
        if not index_path.exists():
            raise MemoryLoadError(f"missing memory index {index_path}")
        try:
            index = read_json(index_path)
        except ValueError as exc:
            raise MemoryLoadError(f"corrupt memory index {index_path}: {exc}") from None
        entries = []
        for row in index.get("entries", []):
            entry_path = directory / row["file"]
            if not entry_path.exists():
                raise MemoryLoadError(f"missing memory entry file {entry_path}")
            try:
                entries.append(MemoryEntry.from_dict(read_json(entry_path)))
            except (ValueError, KeyError) as exc:
                raise MemoryLoadError(
                    f"corrupt memory entry file {entry_path}: {exc}"
                ) from None
        view_table = {
            stage: tuple(tuple(k) for k in keys)
            for stage, keys in index.get("view_table", {}).items()
        }
        return cls(entries=entries, view_table=view_table or dict(DEFAULT_VIEW_TABLE))


def ablated_view_table(program_chain: Dict[str, Tuple[str, str]]) -> Dict[str, Tuple]:
    """View table for the no-memory ablation.

    Each stage sees only the input image, the artifacts the immediately
    preceding stage wrote, and the current program-chain artifact (stages
    rewrite the program they were handed, so the chain keeps flowing even
    without memory). Everything older is withheld.
    """
    order = ["1", "2", "3", "4", "5", "6", "8", "9", "10"]
    stage_outputs = {
        "1": (("1", "description"),),
        "2": (("2", "graph"), ("2", "sidecar")),
        "3": (("3", "layout_program"), ("3", "critique")),
        "4": (("4", "layout_program"),),
        "5": (("5", "profile_set"), ("5", "room_style")),
        "6": (("6", "scene_program"), ("6", "geometry_dict")),
        "8": (("8", "scene_program"),),
        "9": (("9", "scene_program"),),
    }
    table: Dict[str, Tuple] = {}
    for i, stage in enumerate(order):
        keys: List[Tuple[str, str]] = [("0", "image")]
        if i > 0:
            keys.extend(stage_outputs.get(order[i - 1], ()))
        chain = program_chain.get(stage)
        if chain is not None and chain not in keys:
            keys.append(chain)
        table[stage] = tuple(keys)
    return table


# Program-chain key each stage rewrites, used by the ablation table.
PROGRAM_CHAIN = {
    "4": ("3", "layout_program"),
    "5": ("4", "layout_program"),
    "6": ("4", "layout_program"),
    "8": ("6", "scene_program"),
    "9": ("8", "scene_program"),
    "10": ("9", "scene_program"),
}
