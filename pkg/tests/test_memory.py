import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from car.jsonio import canonical_dumps
from car.memory import (
    DEFAULT_VIEW_TABLE,
    MemoryConfigError,
    MemoryConflict,
    MemoryEntry,
    MemoryLoadError,
    MemoryStore,
    PROGRAM_CHAIN,
    ablated_view_table,
)


def entry(stage="1", artifact_type="description", iteration=0, payload=None):
    return MemoryEntry(
        stage=stage,
        artifact_type=artifact_type,
        payload=payload or {"value": stage},
        metadata={"provider": "test"},
        iteration=iteration,
    )


class TestAppend:
    def test_append_grows_by_one(self):
        store = MemoryStore()
        out = store.append(entry())
        assert len(out.entries) == 1
        assert len(store.entries) == 0  # original untouched

    def test_duplicate_key_conflict(self):
        store = MemoryStore().append(entry())
        with pytest.raises(MemoryConflict):
            store.append(entry())

    def test_same_key_different_iteration_ok(self):
        store = MemoryStore().append(entry(iteration=0)).append(entry(iteration=1))
        assert len(store.entries) == 2

    def test_prior_entries_identical(self):
        first = entry()
        store = MemoryStore().append(first)
        grown = store.append(entry(stage="2", artifact_type="graph"))
        assert grown.entries[0] is first

    def test_unknown_artifact_type_rejected(self):
        with pytest.raises(ValueError):
            MemoryEntry(stage="1", artifact_type="hologram", payload={})


class TestView:
    def store(self):
        return (
            MemoryStore()
            .append(entry("0", "image"))
            .append(entry("1", "description"))
            .append(entry("2", "graph"))
            .append(entry("2", "sidecar"))
        )

    def test_stage3_view_excludes_sidecar(self):
        view = self.store().view("3")
        keys = [(e.stage, e.artifact_type) for e in view]
        assert keys == [("0", "image"), ("1", "description"), ("2", "graph")]

    def test_empty_store_empty_view(self):
        assert MemoryStore().view("5") == []

    def test_unknown_stage_config_error(self):
        with pytest.raises(MemoryConfigError):
            self.store().view("42")

    def test_insertion_order_preserved(self):
        store = self.store().append(entry("3", "layout_program"))
        view = store.view("4")
        assert [(e.stage, e.artifact_type) for e in view] == [
            ("0", "image"),
            ("1", "description"),
            ("2", "graph"),
            ("2", "sidecar"),
            ("3", "layout_program"),
        ]

    def test_append_never_retro_modifies_views(self):
        store = self.store()
        before = store.view("3")
        grown = store.append(entry("3", "layout_program"))
        assert store.view("3") == before
        assert grown.view("3") == before  # stage-3 view does not read stage 3

    @given(st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_view_monotone_under_appends(self, seed):
        import random

        rng = random.Random(seed)
        store = MemoryStore()
        stages = ["0", "1", "2", "3", "4", "5"]
        types = ["image", "description", "graph", "sidecar", "layout_program"]
        previous = {s: 0 for s in DEFAULT_VIEW_TABLE}
        for i in range(rng.randint(1, 12)):
            e = MemoryEntry(
                stage=rng.choice(stages),
                artifact_type=rng.choice(types),
                payload={"i": i},
                iteration=i,
            )
            store = store.append(e)
            for stage in DEFAULT_VIEW_TABLE:
                size = len(store.view(stage))
                assert size >= previous[stage]
                previous[stage] = size


class TestPersistence:
    def test_roundtrip_empty(self, tmp_path):
        store = MemoryStore()
        store.persist(tmp_path / "memory")
        loaded = MemoryStore.load(tmp_path / "memory")
        assert loaded.entries == []

    def test_roundtrip_single(self, tmp_path):
        store = MemoryStore().append(entry())
        store.persist(tmp_path / "memory")
        loaded = MemoryStore.load(tmp_path / "memory")
        assert loaded.entries == store.entries
        assert loaded.view_table == {
            k: tuple(v) for k, v in store.view_table.items()
        }

    def test_roundtrip_many_byte_identical(self, tmp_path):
        store = MemoryStore()
        for i in range(10):
            store = store.append(entry("3", "critique", iteration=i, payload={"n": i}))
        a = tmp_path / "a"
        b = tmp_path / "b"
        store.persist(a)
        MemoryStore.load(a).persist(b)
        for path_a in sorted(a.iterdir()):
            assert (b / path_a.name).read_bytes() == path_a.read_bytes()

    def test_missing_index_named(self, tmp_path):
        with pytest.raises(MemoryLoadError, match="index.json"):
            MemoryStore.load(tmp_path / "nope")

    def test_corrupt_entry_named(self, tmp_path):
        store = MemoryStore().append(entry())
        target = store.persist(tmp_path / "memory")
        victim = target / store.entries[0].file_name()
        victim.write_text("{broken", encoding="utf-8")
        with pytest.raises(MemoryLoadError, match=victim.name):
            MemoryStore.load(target)

    def test_payload_roundtrip_lossless(self, tmp_path):
        payload = {"nested": {"values": [1, 2.5, "x", None, True]}}
        store = MemoryStore().append(entry(payload=payload))
        store.persist(tmp_path / "memory")
        loaded = MemoryStore.load(tmp_path / "memory")
        assert loaded.entries[0].payload == payload


class TestAblatedViewTable:
    def test_each_stage_sees_image_and_previous(self):
        table = ablated_view_table(PROGRAM_CHAIN)
        assert table["4"] == (
            ("0", "image"),
            ("3", "layout_program"),
            ("3", "critique"),
        )
        # Stage 6 keeps the program chain even though stage 5 wrote no
        # program artifact.
        assert ("4", "layout_program") in table["6"]
        assert ("1", "description") not in table["6"]
        assert ("2", "sidecar") not in table["6"]

    def test_stage1_unchanged(self):
        table = ablated_view_table(PROGRAM_CHAIN)
        assert table["1"] == (("0", "image"),)
