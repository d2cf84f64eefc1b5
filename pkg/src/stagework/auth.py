"""Accounts, sessions, groups, and the sharing permission model.

Passwords are stored as salted PBKDF2 verifiers. Session tokens are
opaque 256-bit values held in memory so a restart revokes them all.
Permission levels form a total order (none < view < run < edit); a
user's effective level on an object is the maximum of ownership, admin
status, their direct grant, and their best group grant.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

from .errors import (
    AccountDisabled,
    DuplicateGroup,
    DuplicateUser,
    InvalidCredentials,
    PermissionDenied,
    Unauthenticated,
    UnknownGroup,
    UnknownUser,
)
from .store import JsonStore

_PBKDF2_ITERATIONS = 120_000
DEFAULT_TOKEN_TTL = 24 * 3600.0


def hash_password(password: str, salt: Optional[bytes] = None,
                  iterations: int = _PBKDF2_ITERATIONS) -> dict:
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode(), salt, iterations)
    return {"salt": salt.hex(), "hash": digest.hex(), "iterations": iterations}


def verify_password(password: str, verifier: dict) -> bool:
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode(), bytes.fromhex(verifier["salt"]),
        verifier["iterations"])
    return hmac.compare_digest(digest.hex(), verifier["hash"])


# Used to equalize timing when the username does not exist.
_DUMMY_VERIFIER = hash_password("decoy")


@dataclass(frozen=True)
class User:
    username: str
    is_admin: bool = False
    disabled: bool = False
    groups: frozenset = frozenset()


class PermissionLevel(IntEnum):
    NONE = 0
    VIEW = 1
    RUN = 2
    EDIT = 3

    @classmethod
    def parse(cls, text: str) -> "PermissionLevel":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown permission level {text!r}") from None


class AuthService:
    """User accounts plus bearer-token sessions."""

    def __init__(self, store: JsonStore, token_ttl: float = DEFAULT_TOKEN_TTL):
        self._store = store
        self._lock = threading.RLock()
        self._sessions: dict[str, tuple[str, float]] = {}
        self.token_ttl = token_ttl

    # ---------------------------------------------------------------- users

    def create_user(self, username: str, password: str,
                    is_admin: bool = False) -> User:
        with self._lock:
            if self._store.get("users", username) is not None:
                raise DuplicateUser(username)
            record = {"username": username, "is_admin": is_admin,
                      "disabled": False, "verifier": hash_password(password)}
            self._store.put("users", username, record)
            return self._to_user(record)

    def get_user(self, username: str) -> User:
        record = self._store.get("users", username)
        if record is None:
            raise UnknownUser(username)
        return self._to_user(record)

    def list_users(self) -> list[User]:
        return [self._to_user(r) for r in self._store.all("users")]

    def set_password(self, username: str, password: str) -> None:
        with self._lock:
            record = self._required(username)
            record["verifier"] = hash_password(password)
            self._store.put("users", username, record)

    def set_admin(self, username: str, is_admin: bool) -> User:
        with self._lock:
            record = self._required(username)
            record["is_admin"] = is_admin
            self._store.put("users", username, record)
            return self._to_user(record)

    def set_disabled(self, username: str, disabled: bool) -> User:
        with self._lock:
            record = self._required(username)
            record["disabled"] = disabled
            self._store.put("users", username, record)
            if disabled:
                self._sessions = {t: (u, exp) for t, (u, exp)
                                  in self._sessions.items() if u != username}
            return self._to_user(record)

    def _required(self, username: str) -> dict:
        record = self._store.get("users", username)
        if record is None:
            raise UnknownUser(username)
        return record

    def _to_user(self, record: dict) -> User:
        return User(record["username"], record.get("is_admin", False),
                    record.get("disabled", False),
                    frozenset(self.groups_of(record["username"])))

    # --------------------------------------------------------------- groups

    def create_group(self, name: str, owner: str) -> dict:
        with self._lock:
            if self._store.get("groups", name) is not None:
                raise DuplicateGroup(name)
            record = {"name": name, "owner": owner, "members": [owner]}
            self._store.put("groups", name, record)
            return record

    def get_group(self, name: str) -> dict:
        record = self._store.get("groups", name)
        if record is None:
            raise UnknownGroup(name)
        return record

    def list_groups(self) -> list[dict]:
        return self._store.all("groups")

    def set_membership(self, name: str, username: str, member: bool,
                       requester: User) -> dict:
        with self._lock:
            record = self.get_group(name)
            if requester.username != record["owner"] and not requester.is_admin:
                raise PermissionDenied("only the group owner may change members")
            self._required(username)
            members = set(record["members"])
            (members.add if member else members.discard)(username)
            record["members"] = sorted(members)
            self._store.put("groups", name, record)
            return record

    def delete_group(self, name: str, requester: User) -> None:
        with self._lock:
            record = self.get_group(name)
            if requester.username != record["owner"] and not requester.is_admin:
                raise PermissionDenied("only the group owner may delete the group")
            self._store.delete("groups", name)

    def groups_of(self, username: str) -> list[str]:
        return sorted(g["name"] for g in self._store.all("groups")
                      if username in g.get("members", ()))

    # --------------------------------------------------------------- tokens

    def authenticate(self, username: str, password: str) -> str:
        record = self._store.get("users", username)
        if record is None:
            verify_password(password, _DUMMY_VERIFIER)
            raise InvalidCredentials()
        if not verify_password(password, record["verifier"]):
            raise InvalidCredentials()
        if record.get("disabled"):
            raise AccountDisabled()
        token = secrets.token_hex(32)
        with self._lock:
            self._sessions[token] = (username, time.time() + self.token_ttl)
        return token

    def resolve(self, token: Optional[str]) -> User:
        with self._lock:
            entry = self._sessions.get(token or "")
            if entry is None:
                raise Unauthenticated()
            username, expiry = entry
            if time.time() >= expiry:
                del self._sessions[token or ""]
                raise Unauthenticated()
        record = self._store.get("users", username)
        if record is None or record.get("disabled"):
            raise Unauthenticated()
        return self._to_user(record)

    def revoke(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)


class PermissionService:
    """Per-object grants for users and groups, persisted once per object."""

    def __init__(self, store: JsonStore, auth: AuthService):
        self._store = store
        self._auth = auth
        self._lock = threading.RLock()

    def _key(self, kind: str, object_id: str) -> str:
        return f"{kind}.{object_id}"

    def grants(self, kind: str, object_id: str) -> dict:
        record = self._store.get("permissions", self._key(kind, object_id))
        return record or {"users": {}, "groups": {}}

    def set_grant(self, kind: str, object_id: str, *, user: Optional[str] = None,
                  group: Optional[str] = None, level: PermissionLevel) -> dict:
        if (user is None) == (group is None):
            raise ValueError("exactly one of user or group must be given")
        with self._lock:
            record = self.grants(kind, object_id)
            bucket = "users" if user is not None else "groups"
            subject = user if user is not None else group
            if level == PermissionLevel.NONE:
                record[bucket].pop(subject, None)
            else:
                record[bucket][subject] = level.name.lower()
            self._store.put("permissions", self._key(kind, object_id), record)
            return record

    def drop_object(self, kind: str, object_id: str) -> None:
        self._store.delete("permissions", self._key(kind, object_id))

    def effective_level(self, user: User, kind: str, object_id: str,
                        owner: str) -> PermissionLevel:
        if user.is_admin or user.username == owner:
            return PermissionLevel.EDIT
        record = self.grants(kind, object_id)
        level = PermissionLevel.NONE
        direct = record["users"].get(user.username)
        if direct:
            level = max(level, PermissionLevel.parse(direct))
        for group, granted in record["groups"].items():
            if group in user.groups:
                level = max(level, PermissionLevel.parse(granted))
        return level

    def check(self, user: User, kind: str, object_id: str, owner: str,
              required: PermissionLevel, not_found: Exception) -> PermissionLevel:
        """Raise ``not_found`` when the user may not even see the object,
        PermissionDenied when visible but below the required level."""
        effective = self.effective_level(user, kind, object_id, owner)
        if effective < PermissionLevel.VIEW:
            raise not_found
        if effective < required:
            raise PermissionDenied(
                f"{required.name.lower()} access required on {kind} {object_id}")
        return effective
