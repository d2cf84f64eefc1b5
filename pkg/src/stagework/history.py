"""Job history: read-through cache, accounting log, and the resource poller.

Reads of job records go through an in-memory cache backed by the store;
writes go store-first, then cache (write-through), so a completed write
is visible to every later read. The poller refreshes resource usage for
running cluster jobs on a fixed interval and touches nothing else.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import qstat
from .errors import DuplicateEvent
from .store import JsonStore

log = logging.getLogger(__name__)

DEFAULT_POLL_INTERVAL = 30.0


@dataclass
class CacheEntry:
    value: Any
    version: int


@dataclass
class ReadThroughCache:
    """Versioned key/value cache; the loader runs under the cache lock so a
    concurrent write cannot be overwritten by a stale load."""

    hits: int = 0
    misses: int = 0
    _entries: dict = field(default_factory=dict)
    _lock: threading.RLock = field(default_factory=threading.RLock)
    _version: int = 0

    def get(self, key: str, loader: Callable[[], Any]) -> Any:
        with self._lock:
            entry = self._entries.get(key)
            if entry is not None:
                self.hits += 1
                return entry.value
            self.misses += 1
            value = loader()
            if value is not None:
                self._version += 1
                self._entries[key] = CacheEntry(value, self._version)
            return value

    def put(self, key: str, value: Any) -> int:
        with self._lock:
            self._version += 1
            self._entries[key] = CacheEntry(value, self._version)
            return self._version

    def version_of(self, key: str) -> Optional[int]:
        with self._lock:
            entry = self._entries.get(key)
            return entry.version if entry else None

    def invalidate(self, key: str) -> None:
        with self._lock:
            self._entries.pop(key, None)


class AccountingLog:
    """Append-only JSON-lines record of every cluster job's start and end."""

    def __init__(self, store: JsonStore, name: str = "accounting"):
        self._store = store
        self._name = name
        self._lock = threading.Lock()
        self._seen: set[tuple[str, str]] = {
            (rec["job_id"], rec["event"]) for rec in self.records()}

    def records(self) -> list[dict]:
        return list(self._store.read_lines(self._name))

    def record_start(self, job_id: str, node: str, timestamp: float) -> None:
        self._append({"job_id": job_id, "event": "Start", "timestamp": timestamp,
                      "node": node})

    def record_end(self, job_id: str, timestamp: float, *,
                   node: Optional[str] = None, exit_code: Optional[int] = None,
                   reason: Optional[str] = None, used: Optional[dict] = None,
                   start_missing: bool = False) -> None:
        record = {"job_id": job_id, "event": "End", "timestamp": timestamp,
                  "node": node, "exit_code": exit_code, "reason": reason,
                  "resources_used": used or {}}
        if start_missing:
            record["start_missing"] = True
        self._append(record)

    def _append(self, record: dict) -> None:
        key = (record["job_id"], record["event"])
        with self._lock:
            if key in self._seen:
                raise DuplicateEvent(*key)
            self._store.append_line(self._name, record)
            self._seen.add(key)

    def events_for(self, job_id: str) -> list[dict]:
        return [r for r in self.records() if r["job_id"] == job_id]


class HistoryService:
    """Couples the cache, the accounting log, and the resource poller."""

    def __init__(self, store: JsonStore,
                 poll_interval: float = DEFAULT_POLL_INTERVAL):
        self._store = store
        self.cache = ReadThroughCache()
        self.accounting = AccountingLog(store)
        self.poll_interval = poll_interval
        self._executor = None
        self._sample_sink: Optional[Callable[[str, dict], None]] = None
        self._thread: Optional[threading.Thread] = None
        self._stop = threading.Event()

    # ------------------------------------------------------------- records

    def put_job_record(self, job_id: str, record: dict) -> None:
        self._store.put("jobs", job_id, record)
        self.cache.put(f"job.{job_id}", record)

    def get_job_record(self, job_id: str) -> Optional[dict]:
        return self.cache.get(f"job.{job_id}",
                              lambda: self._store.get("jobs", job_id))

    def drop_job_record(self, job_id: str) -> None:
        self._store.delete("jobs", job_id)
        self.cache.invalidate(f"job.{job_id}")

    def job_ids(self) -> list[str]:
        return self._store.keys("jobs")

    # -------------------------------------------------------------- poller

    def attach_executor(self, executor) -> None:
        self._executor = executor

    def set_sample_sink(self, sink: Callable[[str, dict], None]) -> None:
        """The orchestrator's entry point for per-poll resource samples."""
        self._sample_sink = sink

    def poll_once(self) -> int:
        """Refresh resource usage for every running cluster job."""
        if self._executor is None:
            return 0
        refreshed = 0
        for record in self._executor.query_status():
            if record.get("job_state") not in ("R", "S"):
                continue
            try:
                sample = {
                    "time": time.time(),
                    "cpu_seconds": qstat.parse_duration(
                        record.get("resources_used.cput", "00:00:00")),
                    "memory_bytes": qstat.parse_kb(
                        record.get("resources_used.mem", "0kb")),
                    "walltime_seconds": qstat.parse_duration(
                        record.get("resources_used.walltime", "00:00:00")),
                }
            except ValueError:
                log.warning("unparseable status record for %s", record.job_id)
                continue
            if self._sample_sink is not None:
                try:
                    self._sample_sink(record.job_id, sample)
                except Exception:
                    log.exception("resource sample sink failed for %s",
                                  record.job_id)
                    continue
            refreshed += 1
        return refreshed

    def start(self) -> None:
        if self._thread is None:
            self._stop.clear()
            self._thread = threading.Thread(target=self._poll_loop,
                                            name="history-poller", daemon=True)
            self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=10)
            self._thread = None

    def _poll_loop(self) -> None:
        while not self._stop.wait(self.poll_interval):
            try:
                self.poll_once()
            except Exception:
                log.exception("history poll failed")
