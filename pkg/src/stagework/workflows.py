"""Workflow definitions: storage, validation, scripts, profiles, sharing.

Uploaded scripts live under ``<data_dir>/workflows/<wf_id>/scripts/`` and
are copied into job working directories at submit time. Reads use
404-style errors when the requester may not even see the object.
"""

from __future__ import annotations

import re
import shutil
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from . import archive, model
from .auth import AuthService, PermissionLevel, PermissionService, User
from .errors import InvalidWorkflow, IoFailure, UnknownProfile, UnknownWorkflow
from .store import JsonStore

_SCRIPT_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class WorkflowService:
    def __init__(self, store: JsonStore, data_dir: Path | str,
                 perms: PermissionService, auth: AuthService):
        self._store = store
        self._data_dir = Path(data_dir)
        self._perms = perms
        self._auth = auth
        self._lock = threading.RLock()

    # -------------------------------------------------------------- access

    def _load(self, wf_id: str) -> model.Workflow:
        record = self._store.get("workflows", wf_id)
        if record is None:
            raise UnknownWorkflow(wf_id)
        return model.workflow_from_dict(record)

    def authorize(self, wf_id: str, user: User,
                  required: PermissionLevel) -> model.Workflow:
        wf = self._load(wf_id)
        self._perms.check(user, "workflow", wf.id, wf.owner, required,
                          UnknownWorkflow(wf_id))
        return wf

    def get(self, wf_id: str, user: User) -> model.Workflow:
        return self.authorize(wf_id, user, PermissionLevel.VIEW)

    def list_visible(self, user: User) -> list[model.Workflow]:
        visible = []
        for wf_id in self._store.keys("workflows"):
            wf = self._load(wf_id)
            level = self._perms.effective_level(user, "workflow", wf.id, wf.owner)
            if level >= PermissionLevel.VIEW:
                visible.append(wf)
        return visible

    # ---------------------------------------------------------------- CRUD

    def create(self, definition: dict, owner: str) -> model.Workflow:
        with self._lock:
            definition = dict(definition)
            definition["owner"] = owner
            definition.pop("id", None)
            wf = self._deserialize(definition)
            self._validate(wf)
            self._store.put("workflows", wf.id, model.workflow_to_dict(wf))
            self.scripts_dir(wf.id).mkdir(parents=True, exist_ok=True)
            return wf

    def update(self, wf_id: str, definition: dict, user: User) -> model.Workflow:
        with self._lock:
            current = self.authorize(wf_id, user, PermissionLevel.EDIT)
            definition = dict(definition)
            definition["id"] = current.id
            definition["owner"] = current.owner
            definition["created"] = current.created.isoformat()
            definition.pop("modified", None)
            wf = self._deserialize(definition)
            self._validate(wf)
            wf.modified = datetime.now(timezone.utc)
            self._store.put("workflows", wf.id, model.workflow_to_dict(wf))
            return wf

    def delete(self, wf_id: str, user: User) -> None:
        with self._lock:
            wf = self.authorize(wf_id, user, PermissionLevel.EDIT)
            for pid in self._profile_ids(wf.id):
                self._store.delete("profiles", pid)
            self._store.delete("workflows", wf.id)
            self._perms.drop_object("workflow", wf.id)
            shutil.rmtree(self._data_dir / "workflows" / wf.id, ignore_errors=True)

    def _deserialize(self, definition: dict) -> model.Workflow:
        try:
            return model.workflow_from_dict(definition)
        except Exception as exc:
            raise InvalidWorkflow([f"malformed definition: {exc!r}"]) from exc

    def _validate(self, wf: model.Workflow) -> None:
        violations = model.validate_workflow(wf)
        if violations:
            raise InvalidWorkflow(violations)

    # -------------------------------------------------------------- sharing

    def share(self, wf_id: str, user: User, *, target_user: Optional[str] = None,
              target_group: Optional[str] = None, level: PermissionLevel) -> dict:
        wf = self.authorize(wf_id, user, PermissionLevel.EDIT)
        if target_user is not None:
            self._auth.get_user(target_user)
        if target_group is not None:
            self._auth.get_group(target_group)
        return self._perms.set_grant("workflow", wf.id, user=target_user,
                                     group=target_group, level=level)

    # -------------------------------------------------------------- scripts

    def scripts_dir(self, wf_id: str) -> Path:
        return self._data_dir / "workflows" / wf_id / "scripts"

    def put_script(self, wf_id: str, name: str, content: bytes,
                   user: User) -> None:
        self.authorize(wf_id, user, PermissionLevel.EDIT)
        if not _SCRIPT_NAME_RE.match(name):
            raise IoFailure(name, "unsafe script name")
        directory = self.scripts_dir(wf_id)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / name).write_bytes(content)

    def get_script(self, wf_id: str, name: str, user: User) -> bytes:
        self.authorize(wf_id, user, PermissionLevel.VIEW)
        if not _SCRIPT_NAME_RE.match(name):
            raise IoFailure(name, "unsafe script name")
        path = self.scripts_dir(wf_id) / name
        if not path.is_file():
            raise IoFailure(name, "no such script")
        return path.read_bytes()

    def list_scripts(self, wf_id: str, user: User) -> list[str]:
        self.authorize(wf_id, user, PermissionLevel.VIEW)
        directory = self.scripts_dir(wf_id)
        if not directory.is_dir():
            return []
        return sorted(p.name for p in directory.iterdir() if p.is_file())

    def copy_scripts_into(self, wf_id: str, target: Path) -> list[str]:
        directory = self.scripts_dir(wf_id)
        copied = []
        if directory.is_dir():
            for path in sorted(directory.iterdir()):
                if path.is_file():
                    shutil.copy2(path, target / path.name)
                    copied.append(path.name)
        return copied

    # ------------------------------------------------------------- profiles

    def _profile_ids(self, wf_id: str) -> list[str]:
        return [rec["id"] for rec in self._store.all("profiles")
                if rec.get("workflow_id") == wf_id]

    def create_profile(self, wf_id: str, name: str, values: dict,
                       user: User) -> model.InputProfile:
        wf = self.authorize(wf_id, user, PermissionLevel.EDIT)
        profile = model.InputProfile(workflow_id=wf.id, name=name,
                                     values=dict(values), id=uuid.uuid4().hex[:12])
        self._store.put("profiles", profile.id, model.profile_to_dict(profile))
        return profile

    def update_profile(self, wf_id: str, profile_id: str, name: str,
                       values: dict, user: User) -> model.InputProfile:
        self.authorize(wf_id, user, PermissionLevel.EDIT)
        profile = self.get_profile(wf_id, profile_id, user)
        updated = model.InputProfile(workflow_id=profile.workflow_id, name=name,
                                     values=dict(values), id=profile.id)
        self._store.put("profiles", profile.id, model.profile_to_dict(updated))
        return updated

    def get_profile(self, wf_id: str, profile_id: str,
                    user: User) -> model.InputProfile:
        self.authorize(wf_id, user, PermissionLevel.VIEW)
        record = self._store.get("profiles", profile_id)
        if record is None or record.get("workflow_id") != wf_id:
            raise UnknownProfile(profile_id)
        return model.profile_from_dict(record)

    def list_profiles(self, wf_id: str, user: User) -> list[model.InputProfile]:
        self.authorize(wf_id, user, PermissionLevel.VIEW)
        return [model.profile_from_dict(self._store.get("profiles", pid))
                for pid in sorted(self._profile_ids(wf_id))]

    def delete_profile(self, wf_id: str, profile_id: str, user: User) -> None:
        self.authorize(wf_id, user, PermissionLevel.EDIT)
        record = self._store.get("profiles", profile_id)
        if record is None or record.get("workflow_id") != wf_id:
            raise UnknownProfile(profile_id)
        self._store.delete("profiles", profile_id)

    # ------------------------------------------------------- import/export

    def export_archive(self, wf_id: str, user: User) -> bytes:
        wf = self.authorize(wf_id, user, PermissionLevel.VIEW)
        directory = self.scripts_dir(wf_id)

        def read_script(name: str) -> bytes:
            return (directory / name).read_bytes()

        return archive.export_workflow(wf, read_script)

    def import_archive(self, data: bytes, owner: str) -> model.Workflow:
        wf, scripts = archive.import_workflow(data, owner)
        self._validate(wf)
        with self._lock:
            self._store.put("workflows", wf.id, model.workflow_to_dict(wf))
            directory = self.scripts_dir(wf.id)
            directory.mkdir(parents=True, exist_ok=True)
            for name, content in scripts.items():
                (directory / name).write_bytes(content)
        return wf
