"""Workflow export/import as a ZIP archive.

Layout: ``manifest.json`` at the archive root, attached scripts under
``scripts/``. The manifest is canonical JSON (sorted keys, fixed separators)
so exporting the same workflow twice yields byte-identical manifests; ZIP
member timestamps are pinned for the same reason. Round-trip equality is
semantic: ids, owner and timestamps are regenerated on import.
"""

from __future__ import annotations

import json
import zipfile
from io import BytesIO
from typing import Callable

from .errors import CorruptArchive, InvalidManifest, MissingScript
from .model import (
    Workflow,
    validate_workflow,
    workflow_from_dict,
    workflow_to_dict,
)

MANIFEST_NAME = "manifest.json"
SCRIPT_PREFIX = "scripts/"
MANIFEST_FORMAT = "stagework-workflow/1"

# Fixed member timestamp: ZIP has no "no timestamp" notion.
_EPOCH = (1980, 1, 1, 0, 0, 0)


def manifest_bytes(wf: Workflow) -> bytes:
    doc = {
        "format": MANIFEST_FORMAT,
        "workflow": workflow_to_dict(wf, include_identity=False),
    }
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()


def export_workflow(wf: Workflow, read_script: Callable[[str], bytes]) -> bytes:
    """Pack the workflow and its attached scripts into ZIP bytes.

    ``read_script`` maps a script name to its content and should raise
    ``MissingScript`` (or ``FileNotFoundError``) when absent.
    """
    buf = BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        _write(zf, MANIFEST_NAME, manifest_bytes(wf))
        for name in sorted(wf.script_names()):
            try:
                content = read_script(name)
            except FileNotFoundError:
                raise MissingScript(name) from None
            _write(zf, SCRIPT_PREFIX + name, content)
    return buf.getvalue()


def _write(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def import_workflow(data: bytes, new_owner: str) -> tuple[Workflow, dict[str, bytes]]:
    """Unpack an archive into a freshly-owned workflow plus its script files.

    The workflow gets a new id and timestamps; it is validated before being
    returned, so the caller can persist it as-is.
    """
    try:
        zf = zipfile.ZipFile(BytesIO(data))
        bad = zf.testzip()
        if bad is not None:
            raise CorruptArchive(f"corrupt member: {bad}")
        names = set(zf.namelist())
        if MANIFEST_NAME not in names:
            raise CorruptArchive("archive has no manifest.json")
        raw = zf.read(MANIFEST_NAME)
        doc = json.loads(raw.decode("utf-8"))
    except CorruptArchive:
        raise
    except Exception as exc:
        raise CorruptArchive(f"not a readable archive: {exc}") from exc

    if not isinstance(doc, dict) or "workflow" not in doc:
        raise InvalidManifest(["manifest has no workflow document"])
    try:
        wf = workflow_from_dict(doc["workflow"])
    except Exception as exc:
        raise InvalidManifest([f"malformed workflow document: {exc}"]) from exc

    wf.owner = new_owner
    violations = validate_workflow(wf)
    if violations:
        raise InvalidManifest(violations)

    scripts: dict[str, bytes] = {}
    for member in sorted(names):
        if member.startswith(SCRIPT_PREFIX) and not member.endswith("/"):
            scripts[member[len(SCRIPT_PREFIX):]] = zf.read(member)
    missing = [s for s in wf.script_names() if s not in scripts]
    if missing:
        raise InvalidManifest([f"archive lacks attached script {s!r}" for s in missing])
    return wf, scripts
