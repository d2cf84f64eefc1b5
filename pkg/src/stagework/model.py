"""Workflow definitions: stages, parameters, dependency conditions.

A workflow is an ordered list of named stages. Each stage carries a command
template, the parameters the command takes, a resource request, the files it
expects to produce, and conditional dependencies on other stages. Everything
here is an immutable-ish value object; validation returns violations as data
rather than raising.

Command templates use ``${name}`` placeholders (literal ``$`` written as
``$$``). Whitespace in a template separates arguments; a placeholder that
renders empty drops its token.
"""

from __future__ import annotations

import csv
import io
import re
import shlex
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable, Optional

from .errors import (
    BadRowValue,
    EmptyFile,
    MissingRequiredParameter,
    RowArity,
    UnknownColumn,
    UnknownParameter,
    UnknownProfile,
)

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")
_PLACEHOLDER_RE = re.compile(r"\$\$|\$\{([^}]*)\}")

DEFAULT_MEMORY_BYTES = 1 << 30
DEFAULT_WALLTIME_SECONDS = 3600


class ParamKind(str, Enum):
    TEXT = "text"
    NUMBER = "number"
    FLAG = "flag"
    INPUT_FILE = "input-file"


class ConditionKind(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    EXIT_CODES = "exit-codes"
    ALWAYS = "always"


@dataclass(frozen=True)
class DependencyCondition:
    """Predicate on an upstream stage's exit status gating a downstream stage."""

    kind: ConditionKind
    exit_codes: frozenset[int] = frozenset()

    @classmethod
    def success(cls) -> "DependencyCondition":
        return cls(ConditionKind.SUCCESS)

    @classmethod
    def failure(cls) -> "DependencyCondition":
        return cls(ConditionKind.FAILURE)

    @classmethod
    def on_exit_codes(cls, codes: Iterable[int]) -> "DependencyCondition":
        return cls(ConditionKind.EXIT_CODES, frozenset(codes))

    @classmethod
    def always(cls) -> "DependencyCondition":
        return cls(ConditionKind.ALWAYS)

    def __str__(self) -> str:
        if self.kind is ConditionKind.EXIT_CODES:
            return "exit-codes(%s)" % ",".join(str(c) for c in sorted(self.exit_codes))
        return self.kind.value


@dataclass(frozen=True)
class Dependency:
    upstream: str
    condition: DependencyCondition


@dataclass(frozen=True)
class Parameter:
    name: str
    kind: ParamKind = ParamKind.TEXT
    required: bool = False
    default: Any = None


@dataclass(frozen=True)
class ResourceRequest:
    cores: int = 1
    memory: int = DEFAULT_MEMORY_BYTES
    walltime: int = DEFAULT_WALLTIME_SECONDS
    queue: str = ""  # empty string means "the server's default queue"


@dataclass
class Stage:
    name: str
    command_template: str
    parameters: list[Parameter] = field(default_factory=list)
    expected_outputs: list[str] = field(default_factory=list)
    resources: ResourceRequest = field(default_factory=ResourceRequest)
    dependencies: list[Dependency] = field(default_factory=list)
    scripts: list[str] = field(default_factory=list)

    def parameter(self, name: str) -> Optional[Parameter]:
        for p in self.parameters:
            if p.name == name:
                return p
        return None


@dataclass
class Workflow:
    name: str
    description: str = ""
    owner: str = ""
    stages: list[Stage] = field(default_factory=list)
    id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])
    created: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    modified: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def stage(self, name: str) -> Stage:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def stage_names(self) -> list[str]:
        return [s.name for s in self.stages]

    def parameters(self) -> dict[str, Parameter]:
        """All parameters of the workflow, first declaration wins on name clashes."""
        merged: dict[str, Parameter] = {}
        for stage in self.stages:
            for p in stage.parameters:
                merged.setdefault(p.name, p)
        return merged

    def script_names(self) -> list[str]:
        seen: list[str] = []
        for stage in self.stages:
            for name in stage.scripts:
                if name not in seen:
                    seen.append(name)
        return seen


@dataclass
class InputProfile:
    """A named set of default parameter values for one workflow."""

    workflow_id: str
    name: str
    values: dict[str, Any] = field(default_factory=dict)
    id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.where}: {self.message}"


# --- validation ---------------------------------------------------------


def placeholders(template: str) -> list[str]:
    """Names referenced as ``${name}`` in a template; ``$$`` escapes are skipped."""
    names = []
    for m in _PLACEHOLDER_RE.finditer(template):
        if m.group(0) != "$$":
            names.append(m.group(1))
    return names


def topological_order(names: list[str], edges: list[tuple[str, str]]) -> tuple[list[str], list[str]]:
    """Kahn's algorithm. Returns (ordered names, members of cycles).

    The second list is empty iff the graph is acyclic.
    """
    indegree = {n: 0 for n in names}
    downstream: dict[str, list[str]] = {n: [] for n in names}
    for up, down in edges:
        if up in indegree and down in indegree:
            indegree[down] += 1
            downstream[up].append(down)
    frontier = [n for n in names if indegree[n] == 0]
    order: list[str] = []
    while frontier:
        n = frontier.pop(0)
        order.append(n)
        for d in downstream[n]:
            indegree[d] -= 1
            if indegree[d] == 0:
                frontier.append(d)
    cyclic = [n for n in names if n not in order]
    return order, cyclic


def validate_workflow(wf: Workflow) -> list[Violation]:
    """Every violation of the structural invariants; an empty list means valid."""
    report: list[Violation] = []
    if not wf.name:
        report.append(Violation("empty-name", "workflow", "workflow name must be nonempty"))

    names = wf.stage_names()
    seen: set[str] = set()
    for n in names:
        if n in seen:
            report.append(Violation("duplicate-stage", n, "stage name appears more than once"))
        seen.add(n)

    declared_params: dict[str, tuple[str, Parameter]] = {}
    for stage in wf.stages:
        where = f"stage {stage.name}"
        if not stage.name:
            report.append(Violation("empty-name", "stage", "stage name must be nonempty"))
        for dep in stage.dependencies:
            if dep.upstream not in seen:
                report.append(Violation(
                    "unknown-dependency", where,
                    f"depends on undefined stage {dep.upstream!r}"))
            cond = dep.condition
            if cond.kind is ConditionKind.EXIT_CODES:
                if not cond.exit_codes:
                    report.append(Violation(
                        "empty-exit-codes", where,
                        f"exit-code condition on {dep.upstream!r} has no codes"))
                bad = [c for c in cond.exit_codes if not 0 <= c <= 255]
                if bad:
                    report.append(Violation(
                        "exit-code-range", where,
                        f"exit codes outside 0..255: {sorted(bad)}"))
        for name in placeholders(stage.command_template):
            if not stage.parameter(name):
                report.append(Violation(
                    "undeclared-placeholder", where,
                    f"command references undeclared placeholder {name!r}"))
        for p in stage.parameters:
            if not _IDENT_RE.match(p.name):
                report.append(Violation(
                    "bad-parameter-name", where,
                    f"parameter name {p.name!r} is not an identifier"))
            prior = declared_params.get(p.name)
            if prior and prior[1] != p:
                report.append(Violation(
                    "conflicting-parameter", where,
                    f"parameter {p.name!r} conflicts with its declaration in {prior[0]}"))
            declared_params.setdefault(p.name, (where, p))
        for out in stage.expected_outputs:
            if _escapes_working_dir(out):
                report.append(Violation(
                    "unsafe-output-path", where,
                    f"expected output {out!r} escapes the working directory"))
        res = stage.resources
        for fname, value in (("cores", res.cores), ("memory", res.memory), ("walltime", res.walltime)):
            if not isinstance(value, int) or value <= 0:
                report.append(Violation(
                    "bad-resource", where, f"{fname} must be a positive integer"))

    edges = [(d.upstream, s.name) for s in wf.stages for d in s.dependencies]
    _, cyclic = topological_order(names, edges)
    if cyclic:
        report.append(Violation(
            "cycle", "workflow",
            "dependency cycle involving {%s}" % ", ".join(sorted(set(cyclic)))))
    return report


def _escapes_working_dir(path: str) -> bool:
    if not path or path.startswith(("/", "\\")) or re.match(r"^[A-Za-z]:", path):
        return True
    depth = 0
    for part in path.replace("\\", "/").split("/"):
        if part in ("", "."):
            continue
        if part == "..":
            depth -= 1
            if depth < 0:
                return True
        else:
            depth += 1
    return False


# --- command rendering ----------------------------------------------------


def render_command(stage: Stage, values: dict[str, Any]) -> str:
    """Substitute parameter values into the stage's command template.

    Values containing whitespace (or shell metacharacters) are quoted so they
    stay one argument. A flag renders as ``--<name>`` when true and as
    nothing when false; a token that renders empty disappears entirely.
    """
    for name in values:
        if not stage.parameter(name):
            raise UnknownParameter(name)

    rendered: dict[str, str] = {}
    for p in stage.parameters:
        value = values.get(p.name, p.default)
        if value is None:
            if p.required:
                raise MissingRequiredParameter(p.name)
            rendered[p.name] = ""
            continue
        if p.kind is ParamKind.FLAG:
            rendered[p.name] = f"--{p.name}" if _truthy(value) else ""
        else:
            rendered[p.name] = shlex.quote(_stringify(value))

    tokens = []
    for raw in stage.command_template.split():
        token = _substitute(raw, rendered, stage)
        if token:
            tokens.append(token)
    return " ".join(tokens)


def _substitute(token: str, rendered: dict[str, str], stage: Stage) -> str:
    out = []
    pos = 0
    for m in _PLACEHOLDER_RE.finditer(token):
        out.append(token[pos:m.start()])
        if m.group(0) == "$$":
            out.append("$")
        else:
            name = m.group(1)
            if name not in rendered:
                # Unreachable for validated workflows; be strict anyway.
                raise MissingRequiredParameter(name)
            out.append(rendered[name])
        pos = m.end()
    out.append(token[pos:])
    return "".join(out)


def _stringify(value: Any) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _truthy(value: Any) -> bool:
    if isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes", "on")
    return bool(value)


# --- input resolution -------------------------------------------------------


def resolve_inputs(wf: Workflow,
                   profile: Optional[InputProfile] = None,
                   overrides: Optional[dict[str, Any]] = None) -> dict[str, Any]:
    """Merge parameter values: overrides beat the profile, which beats defaults.

    Flags with no explicit value materialize as False. Raises if a required
    parameter is left without a value anywhere.
    """
    overrides = overrides or {}
    params = wf.parameters()
    if profile is not None and profile.workflow_id != wf.id:
        raise UnknownProfile(profile.id)

    resolved: dict[str, Any] = {}
    for name, p in params.items():
        if p.default is not None:
            resolved[name] = p.default
        elif p.kind is ParamKind.FLAG:
            resolved[name] = False
    for source in (profile.values if profile else {}, overrides):
        for name, value in source.items():
            if name not in params:
                raise UnknownParameter(name)
            resolved[name] = value

    missing = sorted(n for n, p in params.items() if p.required and n not in resolved)
    if missing:
        raise MissingRequiredParameter(missing[0])
    return resolved


# --- batch files --------------------------------------------------------


def parse_batch_file(text: str, wf: Workflow) -> list[dict[str, Any]]:
    """Parse a delimiter-separated batch file into one input map per row.

    The first line is a header of parameter names; the delimiter (tab or
    comma) is auto-detected from it. Row order is preserved, which is the
    submission order. Values are coerced per parameter kind so flags and
    numbers behave the same as form inputs.
    """
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        raise EmptyFile("batch file has no content")

    header_line = lines[0]
    delimiter = "\t" if "\t" in header_line else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    rows = list(reader)

    header = [h.strip() for h in rows[0]]
    params = wf.parameters()
    for column in header:
        if column not in params:
            raise UnknownColumn(column)

    maps: list[dict[str, Any]] = []
    for offset, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise RowArity(offset)
        values = {}
        for column, cell in zip(header, row):
            values[column] = _coerce_cell(cell.strip(), params[column], offset, column)
        maps.append(values)
    return maps


def _coerce_cell(cell: str, param: Parameter, line: int, column: str) -> Any:
    if param.kind is ParamKind.NUMBER:
        try:
            return int(cell)
        except ValueError:
            try:
                return float(cell)
            except ValueError:
                raise BadRowValue(line, column, f"{cell!r} is not a number") from None
    if param.kind is ParamKind.FLAG:
        low = cell.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off", ""):
            return False
        raise BadRowValue(line, column, f"{cell!r} is not a boolean")
    return cell


# --- serialization ----------------------------------------------------------


def condition_to_dict(cond: DependencyCondition) -> dict:
    d: dict = {"kind": cond.kind.value}
    if cond.kind is ConditionKind.EXIT_CODES:
        d["exit_codes"] = sorted(cond.exit_codes)
    return d


def condition_from_dict(d: dict) -> DependencyCondition:
    kind = ConditionKind(d["kind"])
    codes = frozenset(d.get("exit_codes", []))
    return DependencyCondition(kind, codes)


def stage_to_dict(stage: Stage) -> dict:
    return {
        "name": stage.name,
        "command_template": stage.command_template,
        "parameters": [
            {"name": p.name, "kind": p.kind.value, "required": p.required,
             "default": p.default}
            for p in stage.parameters
        ],
        "expected_outputs": list(stage.expected_outputs),
        "resources": {
            "cores": stage.resources.cores,
            "memory": stage.resources.memory,
            "walltime": stage.resources.walltime,
            "queue": stage.resources.queue,
        },
        "dependencies": [
            {"upstream": d.upstream, "condition": condition_to_dict(d.condition)}
            for d in stage.dependencies
        ],
        "scripts": sorted(stage.scripts),
    }


def stage_from_dict(d: dict) -> Stage:
    res = d.get("resources", {})
    return Stage(
        name=d["name"],
        command_template=d["command_template"],
        parameters=[
            Parameter(p["name"], ParamKind(p.get("kind", "text")),
                      bool(p.get("required", False)), p.get("default"))
            for p in d.get("parameters", [])
        ],
        expected_outputs=list(d.get("expected_outputs", [])),
        resources=ResourceRequest(
            cores=res.get("cores", 1),
            memory=res.get("memory", DEFAULT_MEMORY_BYTES),
            walltime=res.get("walltime", DEFAULT_WALLTIME_SECONDS),
            queue=res.get("queue", ""),
        ),
        dependencies=[
            Dependency(x["upstream"], condition_from_dict(x["condition"]))
            for x in d.get("dependencies", [])
        ],
        scripts=list(d.get("scripts", [])),
    )


def workflow_to_dict(wf: Workflow, include_identity: bool = True) -> dict:
    d = {
        "name": wf.name,
        "description": wf.description,
        "stages": [stage_to_dict(s) for s in wf.stages],
    }
    if include_identity:
        d.update({
            "id": wf.id,
            "owner": wf.owner,
            "created": wf.created.isoformat(),
            "modified": wf.modified.isoformat(),
        })
    return d


def workflow_from_dict(d: dict) -> Workflow:
    wf = Workflow(
        name=d.get("name", ""),
        description=d.get("description", ""),
        owner=d.get("owner", ""),
        stages=[stage_from_dict(s) for s in d.get("stages", [])],
    )
    if "id" in d:
        wf.id = d["id"]
    if "created" in d:
        wf.created = datetime.fromisoformat(d["created"])
    if "modified" in d:
        wf.modified = datetime.fromisoformat(d["modified"])
    return wf


def profile_to_dict(profile: InputProfile) -> dict:
    return {"id": profile.id, "workflow_id": profile.workflow_id,
            "name": profile.name, "values": dict(profile.values)}


def profile_from_dict(d: dict) -> InputProfile:
    return InputProfile(workflow_id=d["workflow_id"], name=d.get("name", ""),
                        values=dict(d.get("values", {})), id=d["id"])


def freeze_workflow(wf: Workflow) -> Workflow:
    """Deep copy via serialization; jobs keep this copy immune to later edits."""
    return workflow_from_dict(workflow_to_dict(wf))


def semantic_content(wf: Workflow) -> dict:
    """The identity-free content used for round-trip equality checks."""
    return workflow_to_dict(wf, include_identity=False)
