"""Flat-file persistence: one JSON document per record, JSONL append logs.

Collections live under ``<root>/db/<collection>/<key>.json``. Writes go
through a temp file and rename, so a crash never leaves a half-written
record. Sequence counters persist across restarts.
"""

from __future__ import annotations

import json
import os
import re
import threading
from pathlib import Path
from typing import Any, Iterator, Optional

_KEY_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._@-]*$")


class JsonStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self._db = self.root / "db"
        self._db.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()

    def _path(self, collection: str, key: str) -> Path:
        if not _KEY_RE.match(key):
            raise ValueError(f"unsafe store key: {key!r}")
        if not _KEY_RE.match(collection):
            raise ValueError(f"unsafe collection name: {collection!r}")
        return self._db / collection / f"{key}.json"

    def put(self, collection: str, key: str, doc: dict) -> None:
        path = self._path(collection, key)
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(doc, sort_keys=True, default=str), encoding="utf-8")
            os.replace(tmp, path)

    def get(self, collection: str, key: str) -> Optional[dict]:
        path = self._path(collection, key)
        with self._lock:
            if not path.exists():
                return None
            return json.loads(path.read_text(encoding="utf-8"))

    def delete(self, collection: str, key: str) -> bool:
        path = self._path(collection, key)
        with self._lock:
            if path.exists():
                path.unlink()
                return True
            return False

    def keys(self, collection: str) -> list[str]:
        folder = self._db / collection
        with self._lock:
            if not folder.is_dir():
                return []
            return sorted(p.stem for p in folder.glob("*.json"))

    def all(self, collection: str) -> list[dict]:
        return [doc for k in self.keys(collection)
                if (doc := self.get(collection, k)) is not None]

    # -- counters -------------------------------------------------------

    def next_seq(self, name: str) -> int:
        """Strictly increasing counter, persisted so restarts never reuse ids."""
        path = self._db / f"{name}.seq"
        with self._lock:
            current = int(path.read_text()) if path.exists() else 0
            value = current + 1
            tmp = path.with_suffix(".seq.tmp")
            tmp.write_text(str(value))
            os.replace(tmp, path)
            return value

    # -- append-only logs ----------------------------------------------------

    def append_line(self, name: str, doc: dict) -> None:
        path = self.root / name
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(doc, sort_keys=True, default=str) + "\n")
                fh.flush()

    def read_lines(self, name: str) -> Iterator[dict]:
        path = self.root / name
        if not path.exists():
            return iter(())
        with path.open(encoding="utf-8") as fh:
            lines = fh.readlines()
        return (json.loads(line) for line in lines if line.strip())
