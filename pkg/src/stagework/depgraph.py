"""Dependency engine: which stages run, which are skipped, when a job fails.

The graph is a pure state machine. Feeding it terminal outcomes (exit codes,
kills) resolves outgoing edges, readies downstreams whose every incoming edge
is satisfied, and transitively skips downstreams with any unsatisfied edge.
The engine itself keeps reporting newly ready stages even after the job
verdict turns failed; stopping work at that point is the orchestrator's call.

Failure rules:
  (a) an executed stage with outgoing edges whose exit code matches none of
      them fails the job (even on exit 0);
  (b) an executed leaf stage with nonzero exit, or a killed leaf, fails it.
Skipped stages never fire either rule: they never ran.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import AlreadyTerminal, UnknownStage
from .model import ConditionKind, DependencyCondition, Workflow

# Kill outcomes take part in condition matching as a failed exit with this
# synthetic code (256 + SIGTERM), so Failure edges let users branch on
# cancellation and walltime kills.
KILL_EXIT_CODE = 271


class StageState(Enum):
    PENDING = "pending"
    READY = "ready"
    SUBMITTED = "submitted"
    RUNNING = "running"
    HELD = "held"
    SUSPENDED = "suspended"
    SUCCEEDED = "succeeded"
    FAILED = "failed"
    SKIPPED = "skipped"
    KILLED = "killed"


TERMINAL_STATES = frozenset(
    {StageState.SUCCEEDED, StageState.FAILED, StageState.SKIPPED, StageState.KILLED}
)
EXECUTED_STATES = frozenset(
    {StageState.SUCCEEDED, StageState.FAILED, StageState.KILLED}
)


@dataclass(frozen=True)
class StageOutcome:
    state: StageState
    exit_code: Optional[int] = None
    reason: Optional[str] = None

    @classmethod
    def succeeded(cls, exit_code: int = 0) -> "StageOutcome":
        return cls(StageState.SUCCEEDED, exit_code)

    @classmethod
    def failed(cls, exit_code: int) -> "StageOutcome":
        return cls(StageState.FAILED, exit_code)

    @classmethod
    def killed(cls, reason: str) -> "StageOutcome":
        return cls(StageState.KILLED, None, reason)

    @classmethod
    def skipped(cls) -> "StageOutcome":
        return cls(StageState.SKIPPED)

    @property
    def matching_code(self) -> Optional[int]:
        """Exit code used for condition matching; kills match like exit 271."""
        if self.state is StageState.KILLED:
            return KILL_EXIT_CODE
        return self.exit_code


@dataclass(frozen=True)
class Edge:
    upstream: str
    downstream: str
    condition: DependencyCondition


@dataclass(frozen=True)
class Verdict:
    state: str  # "running" | "completed" | "failed"
    reason: Optional[str] = None

    @property
    def is_running(self) -> bool:
        return self.state == "running"

    @property
    def is_failed(self) -> bool:
        return self.state == "failed"

    @property
    def is_completed(self) -> bool:
        return self.state == "completed"


RUNNING = Verdict("running")
COMPLETED = Verdict("completed")


def failed_verdict(reason: str) -> Verdict:
    return Verdict("failed", reason)


@dataclass
class TransitionSet:
    newly_ready: set[str] = field(default_factory=set)
    newly_skipped: set[str] = field(default_factory=set)
    verdict: Verdict = RUNNING


def condition_matches(cond: DependencyCondition, exit_code: int) -> bool:
    if cond.kind is ConditionKind.SUCCESS:
        return exit_code == 0
    if cond.kind is ConditionKind.FAILURE:
        return exit_code != 0
    if cond.kind is ConditionKind.EXIT_CODES:
        return exit_code in cond.exit_codes
    return True  # ALWAYS


class DependencyGraph:
    """Single-owner state machine over one workflow run's stages."""

    def __init__(self, names: list[str], edges: list[Edge]):
        unknown = {e.upstream for e in edges} | {e.downstream for e in edges}
        unknown -= set(names)
        if unknown:
            raise UnknownStage(sorted(unknown)[0])
        self._names: list[str] = list(names)
        self._edges: tuple[Edge, ...] = tuple(edges)
        self._states: dict[str, StageState] = {n: StageState.PENDING for n in names}
        self._outcomes: dict[str, StageOutcome] = {}
        self._failure: Optional[str] = None
        self._in_edges: dict[str, list[Edge]] = {n: [] for n in names}
        self._out_edges: dict[str, list[Edge]] = {n: [] for n in names}
        for e in edges:
            self._in_edges[e.downstream].append(e)
            self._out_edges[e.upstream].append(e)
        for n in names:
            if not self._in_edges[n]:
                self._states[n] = StageState.READY

    # -- introspection ------------------------------------------------------

    @property
    def stage_names(self) -> list[str]:
        return list(self._names)

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    def state(self, name: str) -> StageState:
        try:
            return self._states[name]
        except KeyError:
            raise UnknownStage(name) from None

    def outcome(self, name: str) -> Optional[StageOutcome]:
        return self._outcomes.get(name)

    def states(self) -> dict[str, StageState]:
        return dict(self._states)

    def ready_stages(self) -> set[str]:
        return {n for n, s in self._states.items() if s is StageState.READY}

    def executed_stages(self) -> set[str]:
        return {n for n, s in self._states.items() if s in EXECUTED_STATES}

    def skipped_stages(self) -> set[str]:
        return {n for n, s in self._states.items() if s is StageState.SKIPPED}

    def all_terminal(self) -> bool:
        return all(s in TERMINAL_STATES for s in self._states.values())

    def upstream_closure(self, name: str) -> set[str]:
        """All transitive upstream stage names of ``name``."""
        self.state(name)
        out: set[str] = set()
        frontier = [name]
        while frontier:
            n = frontier.pop()
            for e in self._in_edges[n]:
                if e.upstream not in out:
                    out.add(e.upstream)
                    frontier.append(e.upstream)
        return out

    def downstream_closure(self, name: str) -> set[str]:
        self.state(name)
        out: set[str] = set()
        frontier = [name]
        while frontier:
            n = frontier.pop()
            for e in self._out_edges[n]:
                if e.downstream not in out:
                    out.add(e.downstream)
                    frontier.append(e.downstream)
        return out

    # -- progress marks -------------------------------------------------------

    def mark_submitted(self, name: str) -> None:
        self._mark(name, {StageState.READY, StageState.HELD}, StageState.SUBMITTED)

    def mark_running(self, name: str) -> None:
        self._mark(name, {StageState.SUBMITTED, StageState.SUSPENDED}, StageState.RUNNING)

    def mark_held(self, name: str) -> None:
        self._mark(name, {StageState.READY, StageState.SUBMITTED}, StageState.HELD)

    def mark_suspended(self, name: str) -> None:
        self._mark(name, {StageState.RUNNING}, StageState.SUSPENDED)

    def _mark(self, name: str, allowed: set[StageState], new: StageState) -> None:
        current = self.state(name)
        if current in TERMINAL_STATES:
            raise AlreadyTerminal(name)
        if current not in allowed:
            return  # lenient on duplicate progress reports
        self._states[name] = new

    # -- the core transition ---------------------------------------------------

    def on_stage_terminal(self, name: str, outcome: StageOutcome) -> TransitionSet:
        """Record a terminal outcome and compute downstream transitions."""
        current = self.state(name)
        if current in TERMINAL_STATES:
            raise AlreadyTerminal(name)
        if outcome.state not in TERMINAL_STATES:
            raise ValueError(f"outcome state {outcome.state} is not terminal")

        self._states[name] = outcome.state
        self._outcomes[name] = outcome

        if outcome.state in EXECUTED_STATES:
            self._apply_failure_rules(name, outcome)

        newly_ready, newly_skipped = self._propagate()
        return TransitionSet(newly_ready, newly_skipped, self.job_verdict())

    def force_failure(self, reason: str) -> None:
        """Latch a failed verdict without firing the edge-based rules."""
        if self._failure is None:
            self._failure = reason

    def abort_remaining(self) -> set[str]:
        """Skip every stage not yet handed to the executor. Used on job failure
        or cancellation so the run can still quiesce with all stages terminal."""
        skipped: set[str] = set()
        for name, state in self._states.items():
            if state in (StageState.PENDING, StageState.READY, StageState.HELD):
                self._states[name] = StageState.SKIPPED
                self._outcomes[name] = StageOutcome.skipped()
                skipped.add(name)
        return skipped

    def job_verdict(self) -> Verdict:
        if self._failure is not None:
            return failed_verdict(self._failure)
        if self.all_terminal():
            return COMPLETED
        return RUNNING

    # -- internals ------------------------------------------------------------

    def _apply_failure_rules(self, name: str, outcome: StageOutcome) -> None:
        out_edges = self._out_edges[name]
        code = outcome.matching_code
        if out_edges:
            if not any(condition_matches(e.condition, code) for e in out_edges):
                self.force_failure(
                    f"stage {name} exit status {code} matched no dependent condition")
        elif outcome.state is StageState.KILLED or code != 0:
            self.force_failure(f"stage {name} exited with status {code}")

    def _edge_resolution(self, edge: Edge) -> Optional[bool]:
        """True/False once the upstream is terminal, None while unresolved."""
        up_state = self._states[edge.upstream]
        if up_state not in TERMINAL_STATES:
            return None
        if up_state is StageState.SKIPPED:
            return False  # "never ran": not even Always edges fire
        outcome = self._outcomes[edge.upstream]
        return condition_matches(edge.condition, outcome.matching_code)

    def _propagate(self) -> tuple[set[str], set[str]]:
        newly_ready: set[str] = set()
        newly_skipped: set[str] = set()
        changed = True
        while changed:
            changed = False
            for name in self._names:
                if self._states[name] is not StageState.PENDING:
                    continue
                resolutions = [self._edge_resolution(e) for e in self._in_edges[name]]
                if any(r is False for r in resolutions):
                    self._states[name] = StageState.SKIPPED
                    self._outcomes[name] = StageOutcome.skipped()
                    newly_skipped.add(name)
                    changed = True
                elif all(r is True for r in resolutions):
                    self._states[name] = StageState.READY
                    newly_ready.add(name)
                    changed = True
        return newly_ready, newly_skipped


def build_graph(wf: Workflow) -> DependencyGraph:
    """Graph for a validated workflow; zero-dependency stages start ready."""
    edges = [
        Edge(dep.upstream, stage.name, dep.condition)
        for stage in wf.stages
        for dep in stage.dependencies
    ]
    return DependencyGraph(wf.stage_names(), edges)
