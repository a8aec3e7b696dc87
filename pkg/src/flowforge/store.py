"""Budgeted two-tier repository for frames and model blobs.

Each run gets a memory budget; when a put would push the run's memory tier
over budget, the least-recently-used entries are spilled to files under the
configured spill directory (one file per handle id). Reads promote spilled
entries back to memory. Entries are immutable once stored, so concurrent
readers are safe; a single lock makes every operation linearizable.

Recency is a store-global monotonic tick bumped on every put/get, not wall
clock, so eviction order is deterministic and testable. Only reads refresh
an entry's last_access (a handle shows 0 until its first get); entries that
were never read are evicted oldest-insertion-first, so a get always outranks
any later put.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import NotFoundError, SchemaError, StoreFullError
from .frame import Frame, decode_frame, encode_frame, frame_size_bytes

MEMORY = "memory"
DISK = "disk"


@dataclass(frozen=True)
class StoreConfig:
    memory_budget_bytes: int
    spill_dir: str | Path

    def __post_init__(self):
        if self.memory_budget_bytes <= 0:
            raise ValueError("memory_budget_bytes must be positive")


@dataclass(eq=False)
class FrameHandle:
    """Ticket for a stored entry. Identity is the id; tier/last_access are
    maintained by the owning store."""

    id: str
    run_id: str
    size_bytes: int
    tier: str = MEMORY
    last_access: int = 0

    def __hash__(self):
        return hash(self.id)

    def __eq__(self, other):
        return isinstance(other, FrameHandle) and other.id == self.id


@dataclass
class _Entry:
    handle: FrameHandle
    kind: str  # "frame" | "artifact"
    payload: object | None  # Frame or bytes while in memory, None when spilled
    created: int = 0  # insertion tick; LRU tie-break for never-read entries
    artifact_kind: str = ""


class FrameStore:
    def __init__(self, config: StoreConfig):
        self.config = config
        self._spill_dir = Path(config.spill_dir)
        self._spill_dir.mkdir(parents=True, exist_ok=True)
        self._entries: dict[str, _Entry] = {}
        self._lock = threading.Lock()
        self._tick = 0
        self._seq = 0

    # -- public API --------------------------------------------------------

    def put_frame(self, run_id: str, frame: Frame) -> FrameHandle:
        if not isinstance(frame, Frame):
            raise SchemaError(f"expected Frame, got {type(frame).__name__}")
        size = frame_size_bytes(frame)
        with self._lock:
            return self._admit(run_id, "frame", frame, size)

    def put_artifact(self, run_id: str, blob: bytes, kind: str) -> FrameHandle:
        if not isinstance(blob, (bytes, bytearray)) or len(blob) == 0:
            raise SchemaError("artifact blob must be non-empty bytes")
        with self._lock:
            return self._admit(run_id, "artifact", bytes(blob), len(blob), artifact_kind=kind)

    def get_frame(self, handle: FrameHandle) -> Frame:
        with self._lock:
            entry = self._resolve(handle)
            if entry.kind != "frame":
                raise SchemaError(f"handle {entry.handle.id} holds an artifact, not a frame")
            self._touch(entry)
            return entry.payload  # type: ignore[return-value]

    def get_artifact(self, handle: FrameHandle) -> bytes:
        with self._lock:
            entry = self._resolve(handle)
            if entry.kind != "artifact":
                raise SchemaError(f"handle {entry.handle.id} holds a frame, not an artifact")
            self._touch(entry)
            return entry.payload  # type: ignore[return-value]

    def entry_kind(self, handle: FrameHandle) -> str:
        with self._lock:
            return self._resolve_no_touch(handle).kind

    def artifact_kind(self, handle: FrameHandle) -> str:
        with self._lock:
            return self._resolve_no_touch(handle).artifact_kind

    def drop_run(self, run_id: str) -> int:
        with self._lock:
            victims = [e for e in self._entries.values() if e.handle.run_id == run_id]
            for entry in victims:
                if entry.handle.tier == DISK:
                    self._spill_path(entry.handle.id).unlink(missing_ok=True)
                del self._entries[entry.handle.id]
            return len(victims)

    def memory_usage(self, run_id: str) -> int:
        with self._lock:
            return self._memory_total(run_id)

    def disk_usage(self, run_id: str) -> int:
        with self._lock:
            return sum(
                e.handle.size_bytes
                for e in self._entries.values()
                if e.handle.run_id == run_id and e.handle.tier == DISK
            )

    def entry_count(self, run_id: str | None = None) -> int:
        with self._lock:
            if run_id is None:
                return len(self._entries)
            return sum(1 for e in self._entries.values() if e.handle.run_id == run_id)

    # -- internals (caller holds the lock) ----------------------------------

    def _admit(self, run_id: str, kind: str, payload, size: int, artifact_kind: str = "") -> FrameHandle:
        if size > self.config.memory_budget_bytes:
            raise StoreFullError(
                f"entry of {size} B exceeds the {self.config.memory_budget_bytes} B run budget"
            )
        self._seq += 1
        self._tick += 1
        handle = FrameHandle(
            id=f"h{self._seq:06d}",
            run_id=run_id,
            size_bytes=size,
            tier=MEMORY,
            last_access=0,
        )
        entry = _Entry(
            handle=handle, kind=kind, payload=payload,
            created=self._tick, artifact_kind=artifact_kind,
        )
        self._evict_until_fits(run_id, size, protect=handle.id)
        self._entries[handle.id] = entry
        return handle

    def _resolve(self, handle: FrameHandle) -> _Entry:
        entry = self._resolve_no_touch(handle)
        if entry.handle.tier == DISK:
            self._promote(entry)
        return entry

    def _resolve_no_touch(self, handle: FrameHandle) -> _Entry:
        entry = self._entries.get(handle.id if isinstance(handle, FrameHandle) else handle)
        if entry is None:
            hid = handle.id if isinstance(handle, FrameHandle) else handle
            raise NotFoundError(f"unknown handle {hid!r}")
        return entry

    def _touch(self, entry: _Entry):
        self._tick += 1
        entry.handle.last_access = self._tick

    def _memory_total(self, run_id: str) -> int:
        return sum(
            e.handle.size_bytes
            for e in self._entries.values()
            if e.handle.run_id == run_id and e.handle.tier == MEMORY
        )

    def _evict_until_fits(self, run_id: str, incoming: int, protect: str):
        budget = self.config.memory_budget_bytes
        while self._memory_total(run_id) + incoming > budget:
            victims = [
                e
                for e in self._entries.values()
                if e.handle.run_id == run_id
                and e.handle.tier == MEMORY
                and e.handle.id != protect
            ]
            if not victims:
                # Nothing left to spill: incoming <= budget is checked on admit,
                # so this only happens if the protected entry already fits.
                return
            victim = min(victims, key=lambda e: (e.handle.last_access, e.created))
            self._spill(victim)

    def _spill(self, entry: _Entry):
        path = self._spill_path(entry.handle.id)
        if entry.kind == "frame":
            raw = encode_frame(entry.payload)  # type: ignore[arg-type]
        else:
            raw = entry.payload  # type: ignore[assignment]
        try:
            path.write_bytes(raw)
        except OSError as exc:
            raise StoreFullError(f"cannot spill {entry.handle.id}: {exc}") from exc
        entry.payload = None
        entry.handle.tier = DISK

    def _promote(self, entry: _Entry):
        path = self._spill_path(entry.handle.id)
        raw = path.read_bytes()
        payload = decode_frame(raw) if entry.kind == "frame" else raw
        # Make room first; the promoted entry is never its own victim.
        entry.handle.tier = MEMORY
        entry.payload = payload
        self._evict_until_fits(entry.handle.run_id, 0, protect=entry.handle.id)
        path.unlink(missing_ok=True)

    def _spill_path(self, handle_id: str) -> Path:
        return self._spill_dir / f"{handle_id}.bin"
