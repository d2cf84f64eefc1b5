"""Content-addressed snapshots of job working directories.

A snapshot is a manifest (sorted relative paths, sizes, SHA-256 digests)
plus blobs stored once per distinct content under
``<root>/blobs/<first two hex chars>/<digest>``. Restoring writes the
manifested paths back byte-identically and touches nothing else.
"""

from __future__ import annotations

import hashlib
import json
import os
import stat
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import IoFailure, MissingBlob

_CHUNK = 1 << 20


class BlobStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str) -> Path:
        return self.root / digest[:2] / digest

    def has(self, digest: str) -> bool:
        return self._path(digest).exists()

    def put_file(self, source: Path) -> str:
        """Store a file's content, returning its digest. Duplicate content is
        detected by digest and stored once."""
        sha = hashlib.sha256()
        with source.open("rb") as fh:
            while chunk := fh.read(_CHUNK):
                sha.update(chunk)
        digest = sha.hexdigest()
        if not self.has(digest):
            self._write(digest, source.read_bytes())
        return digest

    def put_bytes(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        if not self.has(digest):
            self._write(digest, data)
        return digest

    def _write(self, digest: str, data: bytes) -> None:
        path = self._path(digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def read(self, digest: str) -> bytes:
        path = self._path(digest)
        if not path.exists():
            raise MissingBlob(digest)
        return path.read_bytes()

    def object_count(self) -> int:
        return sum(1 for p in self.root.glob("*/*") if p.is_file())


@dataclass(frozen=True)
class ManifestEntry:
    path: str  # relative, '/'-separated, sorted order in the manifest
    kind: str  # "file" | "dir" | "symlink"
    size: int = 0
    digest: Optional[str] = None
    target: Optional[str] = None  # symlink target string


@dataclass(frozen=True)
class SnapshotManifest:
    entries: tuple[ManifestEntry, ...]
    total_bytes: int

    @property
    def id(self) -> str:
        return hashlib.sha256(json.dumps(manifest_to_dict(self),
                                         sort_keys=True).encode()).hexdigest()


def manifest_to_dict(m: SnapshotManifest) -> dict:
    return {
        "total_bytes": m.total_bytes,
        "entries": [
            {k: v for k, v in (("path", e.path), ("kind", e.kind), ("size", e.size),
                               ("digest", e.digest), ("target", e.target))
             if v is not None}
            for e in m.entries
        ],
    }


def manifest_from_dict(d: dict) -> SnapshotManifest:
    entries = tuple(
        ManifestEntry(e["path"], e["kind"], e.get("size", 0),
                      e.get("digest"), e.get("target"))
        for e in d["entries"]
    )
    return SnapshotManifest(entries, d.get("total_bytes", 0))


def take_snapshot(directory: Path | str, blobs: BlobStore) -> SnapshotManifest:
    """Walk a directory tree into a manifest, storing file contents as blobs."""
    base = Path(directory)
    if not base.is_dir():
        raise IoFailure(str(base), "not a directory")
    entries: list[ManifestEntry] = []
    total = 0
    for path in sorted(base.rglob("*"), key=lambda p: p.relative_to(base).as_posix()):
        rel = path.relative_to(base).as_posix()
        st = path.lstat()
        if stat.S_ISLNK(st.st_mode):
            entries.append(ManifestEntry(rel, "symlink", target=os.readlink(path)))
        elif stat.S_ISDIR(st.st_mode):
            entries.append(ManifestEntry(rel, "dir"))
        elif stat.S_ISREG(st.st_mode):
            digest = blobs.put_file(path)
            entries.append(ManifestEntry(rel, "file", st.st_size, digest))
            total += st.st_size
        else:
            raise IoFailure(rel, "special file cannot be snapshotted")
    return SnapshotManifest(tuple(entries), total)


def restore_snapshot(manifest: SnapshotManifest, blobs: BlobStore,
                     target: Path | str) -> None:
    """Reproduce the manifested paths under ``target``, overwriting only them."""
    base = Path(target)
    base.mkdir(parents=True, exist_ok=True)
    for entry in manifest.entries:
        _check_safe(entry.path)
        dest = base / entry.path
        if entry.kind == "dir":
            dest.mkdir(parents=True, exist_ok=True)
        elif entry.kind == "file":
            dest.parent.mkdir(parents=True, exist_ok=True)
            data = blobs.read(entry.digest or "")
            try:
                dest.write_bytes(data)
            except OSError as exc:
                raise IoFailure(entry.path, str(exc)) from exc
        elif entry.kind == "symlink":
            dest.parent.mkdir(parents=True, exist_ok=True)
            if dest.is_symlink() or dest.exists():
                dest.unlink()
            os.symlink(entry.target or "", dest)
        else:
            raise IoFailure(entry.path, f"unknown entry kind {entry.kind!r}")


def _check_safe(rel: str) -> None:
    if rel.startswith("/") or ".." in rel.split("/"):
        raise IoFailure(rel, "manifest path escapes the target directory")
