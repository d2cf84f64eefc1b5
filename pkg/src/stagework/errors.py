"""Exception types shared across the package.

Every error that can cross the REST boundary lives here so the API layer
can map exception classes to HTTP statuses from a single table.
"""

from __future__ import annotations


class StageworkError(Exception):
    """Base class for all domain errors."""


# --- workflow definitions ---------------------------------------------------

class MissingRequiredParameter(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"missing required parameter: {name}")
        self.name = name


class UnknownParameter(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"unknown parameter: {name}")
        self.name = name


class MissingScript(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"script not found: {name}")
        self.name = name


class CorruptArchive(StageworkError):
    pass


class InvalidManifest(StageworkError):
    def __init__(self, violations):
        super().__init__("manifest describes an invalid workflow: "
                         + "; ".join(str(v) for v in violations))
        self.violations = list(violations)


class InvalidWorkflow(StageworkError):
    """Raised when a workflow definition fails validation on save/submit."""

    def __init__(self, violations):
        super().__init__("invalid workflow: " + "; ".join(str(v) for v in violations))
        self.violations = list(violations)


class BatchFileError(StageworkError):
    pass


class UnknownColumn(BatchFileError):
    def __init__(self, name: str):
        super().__init__(f"batch header names undeclared parameter: {name}")
        self.name = name


class RowArity(BatchFileError):
    def __init__(self, line: int):
        super().__init__(f"row on line {line} does not match header arity")
        self.line = line


class EmptyFile(BatchFileError):
    pass


class BadRowValue(BatchFileError):
    def __init__(self, line: int, column: str, reason: str):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column


# --- dependency engine ------------------------------------------------------

class UnknownStage(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"unknown stage: {name}")
        self.name = name


class AlreadyTerminal(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"stage already terminal: {name}")
        self.name = name


# --- cluster executor -------------------------------------------------------

class UnknownQueue(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"unknown queue: {name}")
        self.name = name


class QueueDisabled(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"queue is disabled: {name}")
        self.name = name


class ResourceLimitExceeded(StageworkError):
    pass


class QueueFull(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"queue is full: {name}")
        self.name = name


class UnknownJob(StageworkError):
    def __init__(self, job_id: str):
        super().__init__(f"unknown job: {job_id}")
        self.job_id = job_id


class InvalidTransition(StageworkError):
    def __init__(self, current: str, requested: str):
        super().__init__(f"cannot {requested} a job in state {current}")
        self.current = current
        self.requested = requested


class UnknownNode(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"unknown node: {name}")
        self.name = name


class NodeBusy(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"node has running jobs: {name}")
        self.name = name


class QueueBusy(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"queue has jobs: {name}")
        self.name = name


class DefaultQueueProtected(StageworkError):
    pass


class DuplicateName(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"name already in use: {name}")
        self.name = name


# --- orchestrator -----------------------------------------------------------

class UnknownWorkflow(StageworkError):
    def __init__(self, wf_id: str):
        super().__init__(f"unknown workflow: {wf_id}")
        self.workflow_id = wf_id


class UnknownProfile(StageworkError):
    def __init__(self, profile_id: str):
        super().__init__(f"unknown input profile: {profile_id}")
        self.profile_id = profile_id


class UpstreamIncomplete(StageworkError):
    def __init__(self, stage: str):
        super().__init__(f"upstream of {stage} did not execute successfully")
        self.stage = stage


class JobTerminal(StageworkError):
    def __init__(self, job_id: str):
        super().__init__(f"job already terminal: {job_id}")
        self.job_id = job_id


class JobRunning(StageworkError):
    def __init__(self, job_id: str):
        super().__init__(f"job still running (cancel it first): {job_id}")
        self.job_id = job_id


class InvalidChange(StageworkError):
    def __init__(self, field: str):
        super().__init__(f"job field cannot be altered: {field}")
        self.field = field


class RowError(StageworkError):
    """A batch row failed; carries the jobs already submitted before it."""

    def __init__(self, line: int, cause: Exception, submitted_ids):
        super().__init__(f"batch row on line {line} failed: {cause}")
        self.line = line
        self.cause = cause
        self.submitted_ids = list(submitted_ids)


# --- snapshots / history ----------------------------------------------------

class MissingBlob(StageworkError):
    def __init__(self, digest: str):
        super().__init__(f"blob not in store: {digest}")
        self.digest = digest


class IoFailure(StageworkError):
    def __init__(self, path: str, reason: str = ""):
        super().__init__(f"io failure at {path}" + (f": {reason}" if reason else ""))
        self.path = path


class DuplicateEvent(StageworkError):
    def __init__(self, job_id: str, event: str):
        super().__init__(f"duplicate accounting event {event} for {job_id}")
        self.job_id = job_id
        self.event = event


# --- auth -------------------------------------------------------------------

class InvalidCredentials(StageworkError):
    def __init__(self):
        # One body for unknown user and wrong password alike.
        super().__init__("invalid credentials")


class AccountDisabled(StageworkError):
    def __init__(self):
        super().__init__("account disabled")


class Unauthenticated(StageworkError):
    def __init__(self, reason: str = "missing or expired token"):
        super().__init__(reason)


class PermissionDenied(StageworkError):
    def __init__(self, detail: str = "permission denied"):
        super().__init__(detail)


class UnknownUser(StageworkError):
    def __init__(self, username: str):
        super().__init__(f"unknown user: {username}")
        self.username = username


class DuplicateUser(StageworkError):
    def __init__(self, username: str):
        super().__init__(f"user already exists: {username}")
        self.username = username


class UnknownGroup(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"unknown group: {name}")
        self.name = name


class DuplicateGroup(StageworkError):
    def __init__(self, name: str):
        super().__init__(f"group already exists: {name}")
        self.name = name
