"""Runs workflows: materializes jobs, drives stages through the cluster,
snapshots working directories, and applies the dependency transitions.

One lock serializes all job mutations. Executor callbacks (epilogues)
enter through ``_on_epilogue``; REST handlers enter through the public
methods. The executor is never called while holding the job lock's
critical invariants in a half-applied state, and the lock order is
always orchestrator before executor.
"""

from __future__ import annotations

import logging
import shutil
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import depgraph, model
from .auth import AuthService, PermissionLevel, PermissionService, User
from .depgraph import DependencyGraph, StageOutcome, StageState
from .errors import (
    InvalidChange,
    InvalidTransition,
    JobRunning,
    JobTerminal,
    PermissionDenied,
    RowError,
    UnknownJob,
    UnknownStage,
    UpstreamIncomplete,
)
from .executor import ClusterExecutor, EpilogueEvent
from .history import HistoryService
from .snapshots import BlobStore, manifest_from_dict, manifest_to_dict, \
    restore_snapshot, take_snapshot
from .store import JsonStore
from .workflows import WorkflowService

log = logging.getLogger(__name__)

ALTERABLE_FIELDS = ("walltime", "memory", "cores", "queue")


@dataclass
class StageRun:
    stage: str
    state: str = StageState.PENDING.value
    cluster_job_id: Optional[str] = None
    exit_code: Optional[int] = None
    reason: Optional[str] = None
    snapshot_id: Optional[str] = None
    stdout_file: Optional[str] = None
    stderr_file: Optional[str] = None
    used: dict = field(default_factory=dict)
    samples: list = field(default_factory=list)
    started_at: Optional[float] = None
    ended_at: Optional[float] = None
    restored: bool = False


@dataclass
class Job:
    id: str
    workflow: model.Workflow  # frozen copy taken at submit time
    owner: str
    inputs: dict
    working_dir: str
    stage_runs: dict = field(default_factory=dict)  # stage name -> StageRun
    verdict: str = "running"
    verdict_reason: Optional[str] = None
    submitted_at: float = 0.0
    ended_at: Optional[float] = None
    held: bool = False
    resource_overrides: dict = field(default_factory=dict)

    @property
    def terminal(self) -> bool:
        return self.verdict in ("completed", "failed")

    def run(self, stage: str) -> StageRun:
        return self.stage_runs[stage]


@dataclass
class AlterationRequest:
    id: str
    job_id: str
    requester: str
    changes: dict
    state: str = "pending"  # pending | approved | denied
    decided_by: Optional[str] = None


class Orchestrator:
    def __init__(self, store: JsonStore, data_dir: Path | str,
                 executor: ClusterExecutor, workflows: WorkflowService,
                 history: HistoryService, perms: PermissionService,
                 auth: AuthService):
        self._store = store
        self._data_dir = Path(data_dir)
        self._executor = executor
        self._workflows = workflows
        self._history = history
        self._perms = perms
        self._auth = auth
        self._lock = threading.RLock()
        self._quiet = threading.Condition(self._lock)
        self._jobs: dict[str, Job] = {}
        self._graphs: dict[str, DependencyGraph] = {}
        self._by_cluster_id: dict[str, tuple[str, str]] = {}
        self.blobs = BlobStore(self._data_dir / "blobs")
        executor.add_epilogue_listener(self._on_epilogue)
        executor.add_prologue_listener(self._on_prologue)
        history.set_sample_sink(self._on_resource_sample)
        self._reconcile()

    # ------------------------------------------------------------ access

    def authorize(self, job_id: str, user: User,
                  required: PermissionLevel) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(job_id)
            self._perms.check(user, "job", job.id, job.owner, required,
                              UnknownJob(job_id))
            return job

    def get_job(self, job_id: str, user: User) -> dict:
        job = self.authorize(job_id, user, PermissionLevel.VIEW)
        with self._lock:
            return _job_to_dict(job)

    def list_jobs(self, user: User) -> list[dict]:
        with self._lock:
            jobs = sorted(self._jobs.values(), key=lambda j: int(j.id))
            visible = [j for j in jobs
                       if self._perms.effective_level(user, "job", j.id, j.owner)
                       >= PermissionLevel.VIEW]
            return [_job_summary(j) for j in visible]

    # ------------------------------------------------------------ submission

    def submit_workflow_job(self, wf_id: str, inputs: Optional[dict], user: User,
                            profile_id: Optional[str] = None,
                            input_files: Optional[dict[str, bytes]] = None) -> Job:
        wf = self._workflows.authorize(wf_id, user, PermissionLevel.RUN)
        profile = (self._workflows.get_profile(wf_id, profile_id, user)
                   if profile_id else None)
        resolved = model.resolve_inputs(wf, profile, inputs or {})
        frozen = model.freeze_workflow(wf)

        with self._lock:
            job_id = str(self._store.next_seq("job"))
            working_dir = (self._data_dir / "users" / user.username
                           / "jobs" / job_id)
            working_dir.mkdir(parents=True, exist_ok=True)
            for name, content in (input_files or {}).items():
                target = working_dir / Path(name).name
                target.write_bytes(content)
            self._workflows.copy_scripts_into(wf.id, working_dir)

            job = Job(id=job_id, workflow=frozen, owner=user.username,
                      inputs=resolved, working_dir=str(working_dir),
                      submitted_at=time.time())
            job.stage_runs = {s.name: StageRun(s.name) for s in frozen.stages}
            graph = depgraph.build_graph(frozen)
            self._jobs[job_id] = job
            self._graphs[job_id] = graph
            ready = sorted(graph.ready_stages())
            self._persist(job)
        self._submit_stages(job_id, ready)
        return job

    def batch_submit(self, wf_id: str, batch_text: str, user: User) -> list[str]:
        wf = self._workflows.authorize(wf_id, user, PermissionLevel.RUN)
        rows = model.parse_batch_file(batch_text, wf)
        submitted: list[str] = []
        for offset, row in enumerate(rows, start=2):
            try:
                job = self.submit_workflow_job(wf_id, row, user)
            except Exception as exc:
                raise RowError(offset, exc, submitted) from exc
            submitted.append(job.id)
        return submitted

    def _submit_stages(self, job_id: str, stages: list[str]) -> None:
        """Hand ready stages to the executor. Called without the lock held so
        executor callbacks can re-enter the orchestrator."""
        for stage_name in sorted(stages):
            with self._lock:
                job = self._jobs[job_id]
                graph = self._graphs[job_id]
                if job.terminal or job.held:
                    return
                if graph.state(stage_name) is not StageState.READY:
                    continue
                stage = job.workflow.stage(stage_name)
                values = {name: value for name, value in job.inputs.items()
                          if stage.parameter(name)}
                command = model.render_command(stage, values)
                resources = self._effective_resources(job, stage)
            try:
                cluster_id = self._executor.submit(
                    command, name=f"{job.workflow.name}.{stage_name}",
                    owner=job.owner, working_dir=job.working_dir,
                    resources=resources,
                    env={"STAGEWORK_JOB": job.id, "STAGEWORK_STAGE": stage_name})
            except Exception as exc:
                log.error("submit of %s/%s failed: %s", job_id, stage_name, exc)
                self._fail_stage_locally(job_id, stage_name,
                                         f"submission failed: {exc}")
                continue
            with self._lock:
                run = job.run(stage_name)
                run.cluster_job_id = cluster_id
                run.state = StageState.SUBMITTED.value
                run.stdout_file = f"{cluster_id}.OU"
                run.stderr_file = f"{cluster_id}.ER"
                graph.mark_submitted(stage_name)
                self._by_cluster_id[cluster_id] = (job_id, stage_name)
                self._persist(job)

    def _effective_resources(self, job: Job, stage: model.Stage) -> model.ResourceRequest:
        res = stage.resources
        overrides = job.resource_overrides
        if not overrides:
            return res
        return model.ResourceRequest(
            cores=int(overrides.get("cores", res.cores)),
            memory=int(overrides.get("memory", res.memory)),
            walltime=int(overrides.get("walltime", res.walltime)),
            queue=str(overrides.get("queue", res.queue)))

    def _fail_stage_locally(self, job_id: str, stage_name: str,
                            reason: str) -> None:
        """A stage that could not even be handed to the executor fails the job."""
        with self._lock:
            job = self._jobs[job_id]
            graph = self._graphs[job_id]
            run = job.run(stage_name)
            run.state = StageState.KILLED.value
            run.reason = reason
            run.ended_at = time.time()
            graph.force_failure(f"stage {stage_name}: {reason}")
            if graph.state(stage_name) not in depgraph.TERMINAL_STATES:
                graph.on_stage_terminal(stage_name, StageOutcome.killed(reason))
            cancel_ids = self._apply_failure(job, graph)
            self._persist(job)
        self._cancel_cluster_jobs(cancel_ids)

    # ------------------------------------------------------------ callbacks

    def _on_prologue(self, event) -> None:
        with self._lock:
            linked = self._by_cluster_id.get(event.job_id)
            if linked:
                job_id, stage_name = linked
                job = self._jobs[job_id]
                run = job.run(stage_name)
                run.state = StageState.RUNNING.value
                run.started_at = event.started_at
                graph = self._graphs[job_id]
                if graph.state(stage_name) is StageState.SUBMITTED:
                    graph.mark_running(stage_name)
                self._persist(job)
        try:
            self._history.accounting.record_start(
                event.job_id, event.node, event.started_at)
        except Exception:
            log.exception("accounting start failed for %s", event.job_id)

    def _on_epilogue(self, event: EpilogueEvent) -> None:
        try:
            self._history.accounting.record_end(
                event.job_id, event.ended_at, node=event.node,
                exit_code=event.exit_code, reason=event.reason,
                used=vars(event.used), start_missing=event.started_at is None)
        except Exception:
            log.exception("accounting end failed for %s", event.job_id)
        with self._lock:
            linked = self._by_cluster_id.get(event.job_id)
        if linked is None:
            return
        self._handle_stage_terminal(linked[0], linked[1], event)

    def _on_resource_sample(self, cluster_id: str, sample: dict) -> None:
        with self._lock:
            linked = self._by_cluster_id.get(cluster_id)
            if linked is None:
                return
            job_id, stage_name = linked
            job = self._jobs[job_id]
            run = job.run(stage_name)
            run.samples.append(sample)
            run.used = {
                "cpu_seconds": sample["cpu_seconds"],
                "peak_memory": sample["memory_bytes"],
                "walltime_seconds": sample["walltime_seconds"],
            }
            self._persist(job)

    def _handle_stage_terminal(self, job_id: str, stage_name: str,
                               event: EpilogueEvent) -> None:
        """Apply one stage's terminal outcome: record it, snapshot the working
        directory BEFORE any dependent may start, then launch what became ready."""
        with self._lock:
            job = self._jobs[job_id]
            graph = self._graphs[job_id]
            if graph.state(stage_name) in depgraph.TERMINAL_STATES:
                return  # duplicate delivery
            run = job.run(stage_name)
            run.exit_code = event.exit_code
            run.reason = event.reason
            run.ended_at = event.ended_at
            if run.started_at is None:
                run.started_at = event.started_at
            run.used = {
                "cpu_seconds": event.used.cpu_seconds,
                "peak_memory": event.used.peak_memory,
                "walltime_seconds": event.used.walltime_seconds,
            }

            outcome = self._to_outcome(event)
            run.state = outcome.state.value

            snapshot = self._take_stage_snapshot(job, stage_name)
            if snapshot is not None:
                run.snapshot_id = snapshot

            stage = job.workflow.stage(stage_name)
            missing = [out for out in stage.expected_outputs
                       if not (Path(job.working_dir) / out).exists()]
            if missing and outcome.state is StageState.SUCCEEDED:
                run.state = StageState.FAILED.value
                run.reason = "missing output: " + ", ".join(missing)
                graph.force_failure(f"stage {stage_name} missing expected "
                                    "output " + ", ".join(missing))

            transitions = graph.on_stage_terminal(stage_name, outcome)
            newly_ready = sorted(transitions.newly_ready)
            self._note_skipped(job, transitions.newly_skipped)

            cancel_ids: list[str] = []
            if transitions.verdict.is_failed:
                cancel_ids = self._apply_failure(job, graph)
            else:
                self._refresh_verdict(job, graph)
            self._persist(job)
        self._cancel_cluster_jobs(cancel_ids)
        if newly_ready and not cancel_ids:
            self._submit_stages(job_id, newly_ready)

    def _to_outcome(self, event: EpilogueEvent) -> StageOutcome:
        if event.killed:
            return StageOutcome.killed(event.reason or "killed")
        code = event.exit_code if event.exit_code is not None else 127
        if code == 0:
            return StageOutcome.succeeded()
        return StageOutcome.failed(code)

    def _take_stage_snapshot(self, job: Job, stage_name: str) -> Optional[str]:
        try:
            manifest = take_snapshot(Path(job.working_dir), self.blobs)
        except Exception:
            log.exception("snapshot failed for job %s stage %s", job.id, stage_name)
            return None
        snapshot_id = f"{job.id}.{stage_name}"
        self._store.put("snapshots", snapshot_id, {
            "id": snapshot_id, "job_id": job.id, "stage": stage_name,
            "taken_at": time.time(), "manifest": manifest_to_dict(manifest)})
        return snapshot_id

    def _note_skipped(self, job: Job, skipped) -> None:
        for name in skipped:
            run = job.run(name)
            run.state = StageState.SKIPPED.value
            run.ended_at = time.time()

    def _apply_failure(self, job: Job, graph: DependencyGraph) -> list[str]:
        """Under the lock: stop everything still pending and collect the
        cluster jobs that must be canceled outside the lock."""
        self._note_skipped(job, graph.abort_remaining())
        self._refresh_verdict(job, graph)
        cancel_ids = []
        for run in job.stage_runs.values():
            if run.cluster_job_id and run.state in (
                    StageState.SUBMITTED.value, StageState.RUNNING.value,
                    StageState.SUSPENDED.value, StageState.HELD.value):
                cancel_ids.append(run.cluster_job_id)
        return cancel_ids

    def _refresh_verdict(self, job: Job, graph: DependencyGraph) -> None:
        verdict = graph.job_verdict()
        job.verdict = verdict.state
        job.verdict_reason = verdict.reason
        if job.terminal and job.ended_at is None:
            job.ended_at = time.time()
        if job.terminal:
            self._quiet.notify_all()

    def _cancel_cluster_jobs(self, cluster_ids: list[str]) -> None:
        for cid in cluster_ids:
            try:
                self._executor.cancel(cid)
            except (InvalidTransition, UnknownJob):
                pass  # already finished; its epilogue settles the stage

    # ------------------------------------------------------------ control

    def cancel_job(self, job_id: str, user: User) -> dict:
        job = self.authorize(job_id, user, PermissionLevel.RUN)
        with self._lock:
            if job.terminal:
                raise InvalidTransition(job.verdict, "cancel")
            graph = self._graphs[job_id]
            graph.force_failure("canceled")
            cancel_ids = self._apply_failure(job, graph)
            self._persist(job)
        self._cancel_cluster_jobs(cancel_ids)
        return self.get_job(job_id, user)

    def hold_job(self, job_id: str, user: User) -> dict:
        """Keep not-yet-started stages from being scheduled; running stages
        are left alone."""
        job = self.authorize(job_id, user, PermissionLevel.RUN)
        hold_ids = []
        with self._lock:
            if job.terminal:
                raise InvalidTransition(job.verdict, "hold")
            job.held = True
            for run in job.stage_runs.values():
                if run.state == StageState.SUBMITTED.value and run.cluster_job_id:
                    hold_ids.append(run.cluster_job_id)
            self._persist(job)
        for cid in hold_ids:
            try:
                self._executor.hold(cid)
            except (InvalidTransition, UnknownJob):
                pass
        return self.get_job(job_id, user)

    def release_job(self, job_id: str, user: User) -> dict:
        job = self.authorize(job_id, user, PermissionLevel.RUN)
        release_ids = []
        with self._lock:
            if job.terminal:
                raise InvalidTransition(job.verdict, "release")
            job.held = False
            graph = self._graphs[job_id]
            ready = sorted(graph.ready_stages())
            for run in job.stage_runs.values():
                if run.state == StageState.SUBMITTED.value and run.cluster_job_id:
                    release_ids.append(run.cluster_job_id)
            self._persist(job)
        for cid in release_ids:
            try:
                self._executor.release(cid)
            except (InvalidTransition, UnknownJob):
                pass
        self._submit_stages(job_id, ready)
        return self.get_job(job_id, user)

    def delete_job(self, job_id: str, user: User) -> None:
        job = self.authorize(job_id, user, PermissionLevel.EDIT)
        with self._lock:
            if not job.terminal:
                raise JobRunning(job_id)
            for run in job.stage_runs.values():
                if run.cluster_job_id:
                    self._by_cluster_id.pop(run.cluster_job_id, None)
                if run.snapshot_id:
                    self._store.delete("snapshots", run.snapshot_id)
            del self._jobs[job_id]
            del self._graphs[job_id]
            self._history.drop_job_record(job_id)
            self._perms.drop_object("job", job_id)
            shutil.rmtree(job.working_dir, ignore_errors=True)

    def share_job(self, job_id: str, user: User, target_user: str,
                  level: PermissionLevel = PermissionLevel.VIEW) -> dict:
        job = self.authorize(job_id, user, PermissionLevel.EDIT)
        self._auth.get_user(target_user)
        # Job grants are read-only by design; anything higher is capped.
        capped = min(level, PermissionLevel.VIEW)
        return self._perms.set_grant("job", job.id, user=target_user,
                                     level=capped)

    def job_file(self, job_id: str, rel_path: str, user: User) -> Path:
        job = self.authorize(job_id, user, PermissionLevel.VIEW)
        base = Path(job.working_dir).resolve()
        target = (base / rel_path).resolve()
        if base != target and base not in target.parents:
            raise PermissionDenied("path escapes the job directory")
        if not target.is_file():
            raise UnknownJob(f"{job_id}/{rel_path}")
        return target

    # ------------------------------------------------------------ repeat

    def repeat_job(self, job_id: str, user: User,
                   from_stage: Optional[str] = None) -> Job:
        original = self.authorize(job_id, user, PermissionLevel.RUN)
        with self._lock:
            if not original.terminal:
                raise JobRunning(job_id)
            wf = model.freeze_workflow(original.workflow)
            inputs = dict(original.inputs)
            replay: list[tuple[str, StageOutcome]] = []
            restore_from: Optional[str] = None
            if from_stage is not None:
                if from_stage not in wf.stage_names():
                    raise UnknownStage(from_stage)
                graph_probe = depgraph.build_graph(wf)
                upstream = sorted(graph_probe.upstream_closure(from_stage))
                for name in upstream:
                    run = original.run(name)
                    if run.state not in (StageState.SUCCEEDED.value,
                                         StageState.FAILED.value) \
                            or run.snapshot_id is None:
                        raise UpstreamIncomplete(from_stage)
                replay = [(name, StageOutcome.succeeded(
                    original.run(name).exit_code or 0)) for name in upstream]
                if upstream:
                    restore_from = max(
                        upstream, key=lambda n: original.run(n).ended_at or 0)

            job_id_new = str(self._store.next_seq("job"))
            working_dir = (self._data_dir / "users" / user.username
                           / "jobs" / job_id_new)
            working_dir.mkdir(parents=True, exist_ok=True)
            self._workflows.copy_scripts_into(wf.id, working_dir)
            if restore_from is not None:
                record = self._store.get(
                    "snapshots", original.run(restore_from).snapshot_id)
                manifest = manifest_from_dict(record["manifest"])
                restore_snapshot(manifest, self.blobs, working_dir)

            job = Job(id=job_id_new, workflow=wf, owner=user.username,
                      inputs=inputs, working_dir=str(working_dir),
                      submitted_at=time.time())
            job.stage_runs = {s.name: StageRun(s.name) for s in wf.stages}
            graph = depgraph.build_graph(wf)
            for name, outcome in replay:
                source = original.run(name)
                run = job.run(name)
                run.state = StageState.SUCCEEDED.value
                run.exit_code = source.exit_code
                run.snapshot_id = source.snapshot_id
                run.restored = True
                run.started_at = run.ended_at = time.time()
                transitions = graph.on_stage_terminal(name, outcome)
                self._note_skipped(job, transitions.newly_skipped)
            self._jobs[job_id_new] = job
            self._graphs[job_id_new] = graph
            ready = sorted(graph.ready_stages())
            self._refresh_verdict(job, graph)
            self._persist(job)
        self._submit_stages(job_id_new, ready)
        return job

    # ------------------------------------------------------------ alterations

    def request_alteration(self, job_id: str, changes: dict,
                           user: User) -> AlterationRequest:
        job = self.authorize(job_id, user, PermissionLevel.RUN)
        for key in changes:
            if key not in ALTERABLE_FIELDS:
                raise InvalidChange(key)
        with self._lock:
            if job.terminal:
                raise JobTerminal(job_id)
            request = AlterationRequest(
                id=str(self._store.next_seq("alteration")), job_id=job_id,
                requester=user.username, changes=dict(changes))
            if user.is_admin:
                request.state = "approved"
                request.decided_by = user.username
                job.resource_overrides.update(request.changes)
                self._persist(job)
            self._store.put("alterations", request.id, vars(request))
            return request

    def decide_alteration(self, request_id: str, approve: bool,
                          user: User) -> AlterationRequest:
        if not user.is_admin:
            raise PermissionDenied("only admins decide alteration requests")
        with self._lock:
            record = self._store.get("alterations", request_id)
            if record is None:
                raise UnknownJob(f"alteration {request_id}")
            request = AlterationRequest(**record)
            if request.state != "pending":
                raise InvalidTransition(request.state, "decide")
            request.state = "approved" if approve else "denied"
            request.decided_by = user.username
            if approve:
                job = self._jobs.get(request.job_id)
                if job is None or job.terminal:
                    raise JobTerminal(request.job_id)
                job.resource_overrides.update(request.changes)
                self._persist(job)
            self._store.put("alterations", request.id, vars(request))
            return request

    def list_alterations(self, user: User) -> list[dict]:
        records = self._store.all("alterations")
        if user.is_admin:
            return records
        return [r for r in records if r.get("requester") == user.username]

    # ------------------------------------------------------------ waiting

    def wait_for_job(self, job_id: str, timeout: float = 30.0) -> dict:
        """Block until the job's verdict is terminal (test helper)."""
        deadline = time.monotonic() + timeout
        with self._quiet:
            while True:
                job = self._jobs.get(job_id)
                if job is None:
                    raise UnknownJob(job_id)
                if job.terminal:
                    return _job_to_dict(job)
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(f"job {job_id} still running")
                self._quiet.wait(remaining)

    # ------------------------------------------------------------ persistence

    def _persist(self, job: Job) -> None:
        self._history.put_job_record(job.id, _job_to_dict(job))

    def _reconcile(self) -> None:
        """Rebuild in-memory graphs from persisted records after a restart and
        settle stages whose cluster jobs finished while we were down."""
        stale_events: list[tuple[str, str, EpilogueEvent]] = []
        with self._lock:
            for job_id in self._history.job_ids():
                record = self._history.get_job_record(job_id)
                try:
                    job = _job_from_dict(record)
                except Exception:
                    log.exception("unreadable job record %s", job_id)
                    continue
                graph = depgraph.build_graph(job.workflow)
                replayed = set()
                order, _ = model.topological_order(
                    job.workflow.stage_names(),
                    [(d.upstream, s.name) for s in job.workflow.stages
                     for d in s.dependencies])
                for name in order:
                    run = job.run(name)
                    state = StageState(run.state)
                    if state in depgraph.EXECUTED_STATES:
                        outcome = self._outcome_from_run(run, state)
                        if graph.state(name) not in depgraph.TERMINAL_STATES:
                            graph.on_stage_terminal(name, outcome)
                        replayed.add(name)
                if job.verdict == "failed":
                    graph.force_failure(job.verdict_reason or "failed")
                    graph.abort_remaining()
                for name in order:
                    run = job.run(name)
                    state = StageState(run.state)
                    if state in (StageState.SUBMITTED, StageState.RUNNING,
                                 StageState.SUSPENDED) and run.cluster_job_id:
                        self._by_cluster_id[run.cluster_job_id] = (job.id, name)
                        if graph.state(name) is StageState.READY:
                            graph.mark_submitted(name)
                        if state in (StageState.RUNNING, StageState.SUSPENDED) \
                                and graph.state(name) is StageState.SUBMITTED:
                            graph.mark_running(name)
                self._jobs[job.id] = job
                self._graphs[job.id] = graph
                if not job.terminal:
                    stale_events.extend(self._stale_terminations(job))
            resubmit = [
                (j.id, sorted(g.ready_stages()))
                for j, g in ((self._jobs[i], self._graphs[i]) for i in self._jobs)
                if not j.terminal and not j.held and g.ready_stages()
            ]
        for job_id, stage_name, event in stale_events:
            self._handle_stage_terminal(job_id, stage_name, event)
        for job_id, stages in resubmit:
            self._submit_stages(job_id, stages)

    def _stale_terminations(self, job: Job):
        """Cluster jobs that reached a terminal state while we were down but
        whose stage records still show them in flight."""
        found = []
        for name, run in job.stage_runs.items():
            if run.state in (StageState.SUBMITTED.value, StageState.RUNNING.value,
                             StageState.SUSPENDED.value) and run.cluster_job_id:
                try:
                    cj = self._executor.get_job(run.cluster_job_id)
                except UnknownJob:
                    continue
                if cj.terminal:
                    event = EpilogueEvent(
                        job_id=cj.id, owner=cj.owner,
                        exit_code=None if cj.state == "Killed" else cj.exit_code,
                        reason=cj.reason if cj.state == "Killed" else None,
                        used=cj.used, started_at=cj.started_at,
                        ended_at=cj.ended_at or time.time(), node=cj.node)
                    found.append((job.id, name, event))
        return found

    def _outcome_from_run(self, run: StageRun, state: StageState) -> StageOutcome:
        if state is StageState.KILLED:
            return StageOutcome.killed(run.reason or "killed")
        if state is StageState.SUCCEEDED:
            return StageOutcome.succeeded(run.exit_code or 0)
        return StageOutcome.failed(run.exit_code if run.exit_code is not None else 1)


# ---------------------------------------------------------------- serialization


def _job_to_dict(job: Job) -> dict:
    return {
        "id": job.id,
        "workflow": model.workflow_to_dict(job.workflow),
        "owner": job.owner,
        "inputs": dict(job.inputs),
        "working_dir": job.working_dir,
        "verdict": job.verdict,
        "verdict_reason": job.verdict_reason,
        "submitted_at": job.submitted_at,
        "ended_at": job.ended_at,
        "held": job.held,
        "resource_overrides": dict(job.resource_overrides),
        "stage_runs": {name: vars(run).copy()
                       for name, run in job.stage_runs.items()},
    }


def _job_summary(job: Job) -> dict:
    states = {name: run.state for name, run in job.stage_runs.items()}
    return {
        "id": job.id, "workflow_name": job.workflow.name, "owner": job.owner,
        "verdict": job.verdict, "verdict_reason": job.verdict_reason,
        "submitted_at": job.submitted_at, "ended_at": job.ended_at,
        "held": job.held, "stage_states": states,
    }


def _job_from_dict(d: dict) -> Job:
    job = Job(
        id=d["id"], workflow=model.workflow_from_dict(d["workflow"]),
        owner=d["owner"], inputs=dict(d.get("inputs", {})),
        working_dir=d["working_dir"], verdict=d.get("verdict", "running"),
        verdict_reason=d.get("verdict_reason"),
        submitted_at=d.get("submitted_at", 0.0), ended_at=d.get("ended_at"),
        held=d.get("held", False),
        resource_overrides=dict(d.get("resource_overrides", {})))
    job.stage_runs = {name: StageRun(**fields)
                      for name, fields in d.get("stage_runs", {}).items()}
    return job
