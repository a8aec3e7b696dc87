import random

import pytest

from flowforge.errors import NotFoundError, SchemaError, StoreFullError
from flowforge.frame import UTF8, ColumnRole, Frame
from flowforge.store import DISK, MEMORY, FrameStore, StoreConfig


def sized_frame(n_bytes: int) -> Frame:
    # one utf8 cell costs len + 4 bytes
    assert n_bytes >= 4
    return Frame.from_columns([("s", UTF8, ColumnRole.PLAIN, ["x" * (n_bytes - 4)])])


@pytest.fixture
def store(tmp_path):
    return FrameStore(StoreConfig(memory_budget_bytes=100, spill_dir=tmp_path / "spill"))


def test_budget_forces_lru_spill(store):
    a = store.put_frame("r1", sized_frame(40))
    b = store.put_frame("r1", sized_frame(40))
    c = store.put_frame("r1", sized_frame(40))
    assert a.tier == DISK  # least recently used
    assert b.tier == MEMORY
    assert c.tier == MEMORY
    assert store.memory_usage("r1") <= 100


def test_get_refreshes_recency(store):
    a = store.put_frame("r1", sized_frame(40))
    store.get_frame(a)
    b = store.put_frame("r1", sized_frame(40))
    store.put_frame("r1", sized_frame(40))
    assert b.tier == DISK  # a was refreshed by the get
    assert a.tier == MEMORY


def test_put_non_frame_is_schema_error(store):
    with pytest.raises(SchemaError):
        store.put_frame("r1", "not a frame")


def test_get_after_spill_round_trips_and_promotes(store):
    frame = sized_frame(40)
    a = store.put_frame("r1", frame)
    store.put_frame("r1", sized_frame(40))
    store.put_frame("r1", sized_frame(40))
    assert a.tier == DISK
    restored = store.get_frame(a)
    assert restored == frame
    assert a.tier == MEMORY
    assert store.memory_usage("r1") <= 100


def test_get_unknown_handle(store):
    a = store.put_frame("r1", sized_frame(20))
    store.drop_run("r1")
    with pytest.raises(NotFoundError):
        store.get_frame(a)


def test_drop_run_counts_and_idempotent(store):
    for _ in range(3):
        store.put_frame("r1", sized_frame(20))
    assert store.drop_run("r1") == 3
    assert store.drop_run("r1") == 0
    assert store.drop_run("never-existed") == 0
    assert store.memory_usage("r1") == 0
    assert store.disk_usage("r1") == 0


def test_artifact_round_trip_and_budget(store):
    blob = bytes(range(64))
    handle = store.put_artifact("r1", blob, kind="model")
    assert store.get_artifact(handle) == blob
    assert store.artifact_kind(handle) == "model"
    # artifacts share the frame budget
    store.put_artifact("r1", b"y" * 40, kind="model")
    third = store.put_artifact("r1", b"z" * 40, kind="model")
    assert handle.tier == DISK
    assert third.tier == MEMORY
    assert store.memory_usage("r1") <= 100


def test_entry_larger_than_budget_rejected(store):
    with pytest.raises(StoreFullError):
        store.put_artifact("r1", b"a" * 101, kind="model")
    with pytest.raises(StoreFullError):
        store.put_frame("r1", sized_frame(150))


def test_empty_artifact_rejected(store):
    with pytest.raises(SchemaError):
        store.put_artifact("r1", b"", kind="model")


def test_budgets_are_per_run(store):
    store.put_frame("r1", sized_frame(80))
    b = store.put_frame("r2", sized_frame(80))
    assert b.tier == MEMORY
    assert store.memory_usage("r1") == 80
    assert store.memory_usage("r2") == 80


def test_handle_ids_never_repeat(store):
    ids = set()
    for _ in range(20):
        h = store.put_frame("r1", sized_frame(10))
        assert h.id not in ids
        ids.add(h.id)
    store.drop_run("r1")
    h = store.put_frame("r1", sized_frame(10))
    assert h.id not in ids


class ShadowStore:
    """Independent model of the tier semantics: plain dict plus list scans.
    Reads stamp recency; unread entries age by insertion order."""

    def __init__(self, budget):
        self.budget = budget
        self.entries = {}  # id -> [payload, size, last_read, tier, inserted]
        self.tick = 0

    def _mem_total(self):
        return sum(e[1] for e in self.entries.values() if e[3] == "memory")

    def _spill_lru(self, protect):
        while self._mem_total() > self.budget:
            oldest, oldest_key = None, None
            for hid, e in self.entries.items():
                if e[3] != "memory" or hid == protect:
                    continue
                key = (e[2], e[4])
                if oldest_key is None or key < oldest_key:
                    oldest, oldest_key = hid, key
            if oldest is None:
                return
            self.entries[oldest][3] = "disk"

    def put(self, hid, payload, size):
        self.tick += 1
        self.entries[hid] = [payload, size, 0, "memory", self.tick]
        self._spill_lru(protect=hid)

    def get(self, hid):
        self.tick += 1
        entry = self.entries[hid]
        entry[2] = self.tick
        entry[3] = "memory"
        self._spill_lru(protect=hid)
        return entry[0]


def test_concurrent_readers_and_writers_are_safe(tmp_path):
    import threading

    store = FrameStore(StoreConfig(memory_budget_bytes=500, spill_dir=tmp_path / "c"))
    seed_frames = [sized_frame(30) for _ in range(4)]
    handles = [store.put_frame("run", f) for f in seed_frames]
    errors = []

    def hammer(worker: int):
        try:
            for i in range(50):
                handle = handles[(worker + i) % len(handles)]
                assert store.get_frame(handle) == seed_frames[handles.index(handle)]
                store.put_frame("run", sized_frame(10 + (worker * 7 + i) % 40))
        except Exception as exc:  # pragma: no cover - surfaced via the list
            errors.append(exc)

    threads = [threading.Thread(target=hammer, args=(w,)) for w in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    assert store.memory_usage("run") <= 500


def test_random_ops_match_shadow_oracle(tmp_path):
    rng = random.Random(1234)
    store = FrameStore(StoreConfig(memory_budget_bytes=200, spill_dir=tmp_path / "s"))
    shadow = ShadowStore(200)
    live = []
    for _ in range(1000):
        if not live or rng.random() < 0.5:
            size = rng.randint(5, 80)
            frame = sized_frame(size)
            handle = store.put_frame("run", frame)
            shadow.put(handle.id, frame, size)
            live.append(handle)
        else:
            handle = rng.choice(live)
            got = store.get_frame(handle)
            expected = shadow.get(handle.id)
            assert got == expected
        for h in live:
            assert h.tier == shadow.entries[h.id][3]
        assert store.memory_usage("run") <= 200
        assert store.memory_usage("run") == shadow._mem_total()
