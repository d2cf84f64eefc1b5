"""Embedded cluster executor.

Models nodes and queues, schedules jobs FIFO (no backfill) onto the
first online node with room, runs each command as a real subprocess in
its own session, enforces walltime with a terminate-then-kill grace
interval, and answers status queries in the classic long text form.

Nodes are accounting fictions: every process runs on the local host and
node capacities only bound what the scheduler will place. One lock owns
all cluster state; prologue/epilogue listeners always fire outside it.
"""

from __future__ import annotations

import logging
import os
import shutil
import signal
import subprocess
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Protocol

import psutil

from . import qstat
from .errors import (
    DefaultQueueProtected,
    DuplicateName,
    InvalidTransition,
    NodeBusy,
    QueueBusy,
    QueueDisabled,
    QueueFull,
    ResourceLimitExceeded,
    UnknownJob,
    UnknownNode,
    UnknownQueue,
)
from .model import ResourceRequest
from .store import JsonStore

log = logging.getLogger(__name__)

# Synthetic exit status reported for jobs the executor killed
# (256 + SIGTERM), mirroring batch-scheduler convention.
KILL_EXIT_STATUS = 271

ONLINE = "online"
OFFLINE = "offline"

QUEUED = "Queued"
HELD = "Held"
RUNNING = "Running"
SUSPENDED = "Suspended"
EXITED = "Exited"
KILLED = "Killed"

TERMINAL_JOB_STATES = frozenset({EXITED, KILLED})

WALLTIME_EXCEEDED = "WalltimeExceeded"
CANCELED = "Canceled"
NODE_OFFLINE = "NodeOffline"


@dataclass
class Node:
    name: str
    cores_total: int
    memory_total: int
    state: str = ONLINE
    cores_used: int = 0
    memory_used: int = 0
    running: set = field(default_factory=set)

    def fits(self, req: ResourceRequest) -> bool:
        return (self.state == ONLINE
                and self.cores_total - self.cores_used >= req.cores
                and self.memory_total - self.memory_used >= req.memory)


@dataclass
class ClusterQueue:
    name: str
    enabled: bool = True
    max_walltime: Optional[int] = None
    max_queued: Optional[int] = None
    default_request: ResourceRequest = field(default_factory=ResourceRequest)


@dataclass
class ServerSettings:
    server_name: str = "stagework"
    tick_interval: float = 0.5
    default_queue: str = "batch"
    grace_seconds: float = 5.0


@dataclass
class ResourcesUsed:
    cpu_seconds: float = 0.0
    peak_memory: int = 0
    walltime_seconds: float = 0.0


@dataclass
class ClusterJob:
    id: str
    name: str
    owner: str
    queue: str
    resources: ResourceRequest
    command: str
    working_dir: str
    env: dict = field(default_factory=dict)
    state: str = QUEUED
    reason: Optional[str] = None
    node: Optional[str] = None
    exit_code: Optional[int] = None
    used: ResourcesUsed = field(default_factory=ResourcesUsed)
    submitted_at: float = 0.0
    started_at: Optional[float] = None
    ended_at: Optional[float] = None
    epilogue_fired: bool = False

    @property
    def seq(self) -> int:
        return int(self.id.split(".", 1)[0])

    @property
    def terminal(self) -> bool:
        return self.state in TERMINAL_JOB_STATES

    @property
    def stdout_name(self) -> str:
        return f"{self.id}.OU"

    @property
    def stderr_name(self) -> str:
        return f"{self.id}.ER"


@dataclass(frozen=True)
class PrologueEvent:
    job_id: str
    owner: str
    node: str
    started_at: float


@dataclass(frozen=True)
class EpilogueEvent:
    job_id: str
    owner: str
    exit_code: Optional[int]  # None when killed
    reason: Optional[str]     # termination reason when killed
    used: ResourcesUsed
    started_at: Optional[float]  # None when the job never started
    ended_at: float
    node: Optional[str] = None

    @property
    def killed(self) -> bool:
        return self.reason is not None


class ResourceManagerAdapter(Protocol):
    """The seam a real batch-system binding would implement."""

    def submit(self, command: str, *, name: str, owner: str, working_dir: str,
               resources: Optional[ResourceRequest] = None,
               queue: Optional[str] = None, env: Optional[dict] = None,
               hold: bool = False) -> str: ...

    def query_status(self, job_id: Optional[str] = None) -> list[qstat.StatusRecord]: ...

    def cancel(self, job_id: str) -> str: ...

    def hold(self, job_id: str) -> str: ...

    def release(self, job_id: str) -> str: ...


class _Runtime:
    """Per-job process handles; never persisted."""

    def __init__(self):
        self.proc: Optional[subprocess.Popen] = None
        self.force_timer: Optional[threading.Timer] = None
        self.kill_requested = False


class ClusterExecutor:
    def __init__(self, store: JsonStore, settings: Optional[ServerSettings] = None):
        self._store = store
        self._lock = threading.RLock()
        self._jobs: dict[str, ClusterJob] = {}
        self._nodes: dict[str, Node] = {}
        self._queues: dict[str, ClusterQueue] = {}
        self._runtime: dict[str, _Runtime] = {}
        self._prologue_listeners: list[Callable[[PrologueEvent], None]] = []
        self._epilogue_listeners: list[Callable[[EpilogueEvent], None]] = []
        self._pending_epilogues: list[EpilogueEvent] = []
        self._tick_thread: Optional[threading.Thread] = None
        self._stop = threading.Event()
        self.settings = settings or ServerSettings()
        self._load()

    # ------------------------------------------------------------ lifecycle

    def _load(self) -> None:
        saved = self._store.get("server", "settings")
        if saved:
            self.settings = ServerSettings(**saved)
        else:
            self._store.put("server", "settings", vars(self.settings))
        for rec in self._store.all("nodes"):
            node = Node(rec["name"], rec["cores_total"], rec["memory_total"],
                        rec.get("state", ONLINE))
            self._nodes[node.name] = node
        for rec in self._store.all("queues"):
            q = ClusterQueue(rec["name"], rec.get("enabled", True),
                             rec.get("max_walltime"), rec.get("max_queued"),
                             ResourceRequest(**rec.get("default_request", {})))
            self._queues[q.name] = q
        if self.settings.default_queue not in self._queues:
            self._queues[self.settings.default_queue] = ClusterQueue(
                self.settings.default_queue)
            self._persist_queue(self._queues[self.settings.default_queue])
        now = time.time()
        for rec in self._store.all("cluster_jobs"):
            job = _job_from_dict(rec)
            if job.state in (RUNNING, SUSPENDED):
                # The process died with the previous server instance.
                job.state = KILLED
                job.reason = NODE_OFFLINE
                job.exit_code = KILL_EXIT_STATUS
                job.ended_at = now
                job.used.walltime_seconds = now - (job.started_at or now)
                self._persist_job(job)
                if not job.epilogue_fired:
                    self._pending_epilogues.append(self._epilogue_event(job))
                    job.epilogue_fired = True
                    self._persist_job(job)
            self._jobs[job.id] = job
            self._runtime[job.id] = _Runtime()

    def start(self) -> None:
        """Fire any epilogues owed from a previous run, then begin ticking."""
        pending, self._pending_epilogues = self._pending_epilogues, []
        for event in pending:
            self._fire_epilogue(event)
        if self._tick_thread is None:
            self._stop.clear()
            self._tick_thread = threading.Thread(
                target=self._tick_loop, name="cluster-tick", daemon=True)
            self._tick_thread.start()

    def stop(self, kill_running: bool = True) -> None:
        self._stop.set()
        if self._tick_thread:
            self._tick_thread.join(timeout=10)
            self._tick_thread = None
        with self._lock:
            runtimes = list(self._runtime.values())
        for rt in runtimes:
            if rt.force_timer:
                rt.force_timer.cancel()
            if kill_running and rt.proc and rt.proc.poll() is None:
                _signal_group(rt.proc, signal.SIGKILL)

    def _tick_loop(self) -> None:
        while not self._stop.wait(self.settings.tick_interval):
            try:
                self.tick()
            except Exception:
                log.exception("scheduler tick failed")

    # ------------------------------------------------------------ listeners

    def add_prologue_listener(self, fn: Callable[[PrologueEvent], None]) -> None:
        self._prologue_listeners.append(fn)

    def add_epilogue_listener(self, fn: Callable[[EpilogueEvent], None]) -> None:
        self._epilogue_listeners.append(fn)

    def _fire_prologue(self, event: PrologueEvent) -> None:
        for fn in list(self._prologue_listeners):
            try:
                fn(event)
            except Exception:
                log.exception("prologue listener failed for %s", event.job_id)

    def _fire_epilogue(self, event: EpilogueEvent) -> None:
        for fn in list(self._epilogue_listeners):
            try:
                fn(event)
            except Exception:
                log.exception("epilogue listener failed for %s", event.job_id)

    # ------------------------------------------------------------ submission

    def submit(self, command: str, *, name: str, owner: str, working_dir: str,
               resources: Optional[ResourceRequest] = None,
               queue: Optional[str] = None, env: Optional[dict] = None,
               hold: bool = False) -> str:
        with self._lock:
            queue_name = queue or (resources.queue if resources else "") \
                or self.settings.default_queue
            q = self._queues.get(queue_name)
            if q is None:
                raise UnknownQueue(queue_name)
            if not q.enabled:
                raise QueueDisabled(queue_name)
            req = resources or q.default_request
            if req.queue != queue_name:
                req = replace(req, queue=queue_name)
            if q.max_walltime is not None and req.walltime > q.max_walltime:
                raise ResourceLimitExceeded(
                    f"walltime {req.walltime}s exceeds queue limit {q.max_walltime}s")
            if q.max_queued is not None:
                waiting = sum(1 for j in self._jobs.values()
                              if j.queue == queue_name and j.state in (QUEUED, HELD))
                if waiting >= q.max_queued:
                    raise QueueFull(queue_name)
            seq = self._store.next_seq("cluster_job")
            job = ClusterJob(
                id=f"{seq}.{self.settings.server_name}",
                name=name, owner=owner, queue=queue_name, resources=req,
                command=command, working_dir=working_dir, env=dict(env or {}),
                state=HELD if hold else QUEUED, submitted_at=time.time())
            self._jobs[job.id] = job
            self._runtime[job.id] = _Runtime()
            self._persist_job(job)
            return job.id

    # ------------------------------------------------------------ scheduling

    def tick(self, now: Optional[float] = None) -> list[tuple[str, str]]:
        """One scheduler pass: enforce walltime, sample usage, place jobs.

        Returns the (job id, node name) assignments made this pass.
        """
        now = now if now is not None else time.time()
        to_kill: list[ClusterJob] = []
        assignments: list[ClusterJob] = []
        with self._lock:
            for job in self._jobs.values():
                if job.state in (RUNNING, SUSPENDED) and job.started_at is not None:
                    if now - job.started_at > job.resources.walltime:
                        to_kill.append(job)
            self._sample_usage(now)
            for queue_name in sorted(self._queues):
                q = self._queues[queue_name]
                if not q.enabled:
                    continue
                waiting = sorted((j for j in self._jobs.values()
                                  if j.queue == queue_name and j.state == QUEUED),
                                 key=lambda j: j.seq)
                for job in waiting:
                    node = self._find_node(job.resources)
                    if node is None:
                        break  # blocked head blocks the queue; no backfill
                    node.cores_used += job.resources.cores
                    node.memory_used += job.resources.memory
                    node.running.add(job.id)
                    job.node = node.name
                    job.state = RUNNING
                    job.started_at = now
                    self._persist_job(job)
                    assignments.append(job)
        for job in to_kill:
            self._request_kill(job.id, WALLTIME_EXCEEDED)
        for job in assignments:
            self._launch(job)
        return [(j.id, j.node or "") for j in assignments]

    def _find_node(self, req: ResourceRequest) -> Optional[Node]:
        for name in sorted(self._nodes):
            if self._nodes[name].fits(req):
                return self._nodes[name]
        return None

    def _launch(self, job: ClusterJob) -> None:
        self._fire_prologue(PrologueEvent(job.id, job.owner, job.node or "",
                                          job.started_at or time.time()))
        workdir = Path(job.working_dir)
        env = {**os.environ, **job.env}
        try:
            out = open(workdir / job.stdout_name, "wb")
            err = open(workdir / job.stderr_name, "wb")
            try:
                proc = subprocess.Popen(
                    job.command, shell=True, cwd=str(workdir),
                    stdout=out, stderr=err, env=env, start_new_session=True)
            finally:
                out.close()
                err.close()
        except OSError as exc:
            self._record_spawn_failure(job, exc)
            return
        with self._lock:
            rt = self._runtime[job.id]
            rt.proc = proc
            if rt.kill_requested:
                # Canceled in the window between assignment and spawn.
                _signal_group(proc, signal.SIGKILL)
        threading.Thread(target=self._supervise, args=(job.id, proc),
                         name=f"supervise-{job.id}", daemon=True).start()

    def _record_spawn_failure(self, job: ClusterJob, exc: OSError) -> None:
        note = f"stagework: failed to start command: {exc}\n"
        try:
            with open(Path(job.working_dir) / job.stderr_name, "ab") as fh:
                fh.write(note.encode())
        except OSError:
            pass
        with self._lock:
            self._release_node(job)
            if not job.terminal:
                job.state = EXITED
                job.exit_code = 127
            job.ended_at = time.time()
            job.used.walltime_seconds = job.ended_at - (job.started_at or job.ended_at)
            event = self._mark_epilogue(job)
        if event:
            self._fire_epilogue(event)

    def _supervise(self, job_id: str, proc: subprocess.Popen) -> None:
        proc.wait()
        self._reap(job_id, proc.returncode)

    def _reap(self, job_id: str, returncode: int) -> None:
        with self._lock:
            job = self._jobs[job_id]
            rt = self._runtime[job_id]
            if rt.force_timer:
                rt.force_timer.cancel()
                rt.force_timer = None
            self._release_node(job)
            job.ended_at = time.time()
            job.used.walltime_seconds = job.ended_at - (job.started_at or job.ended_at)
            if job.state != KILLED:
                job.state = EXITED
                job.exit_code = _map_returncode(returncode)
            event = self._mark_epilogue(job)
        if event:
            self._fire_epilogue(event)

    def _release_node(self, job: ClusterJob) -> None:
        node = self._nodes.get(job.node or "")
        if node and job.id in node.running:
            node.running.discard(job.id)
            node.cores_used -= job.resources.cores
            node.memory_used -= job.resources.memory

    def _mark_epilogue(self, job: ClusterJob) -> Optional[EpilogueEvent]:
        """Under the lock: persist and claim the single epilogue delivery."""
        if job.epilogue_fired:
            self._persist_job(job)
            return None
        job.epilogue_fired = True
        self._persist_job(job)
        return self._epilogue_event(job)

    def _epilogue_event(self, job: ClusterJob) -> EpilogueEvent:
        return EpilogueEvent(
            job_id=job.id, owner=job.owner,
            exit_code=None if job.state == KILLED else job.exit_code,
            reason=job.reason if job.state == KILLED else None,
            used=replace(job.used), started_at=job.started_at,
            ended_at=job.ended_at or time.time(), node=job.node)

    # ------------------------------------------------------------ control

    def cancel(self, job_id: str) -> str:
        with self._lock:
            job = self._require(job_id)
            if job.terminal:
                raise InvalidTransition(job.state, "cancel")
            if job.state in (QUEUED, HELD):
                job.state = KILLED
                job.reason = CANCELED
                job.exit_code = KILL_EXIT_STATUS
                job.ended_at = time.time()
                event = self._mark_epilogue(job)
                state = job.state
            else:
                event = None
                state = self._begin_kill(job, CANCELED)
        if event:
            self._fire_epilogue(event)
        return state

    def _request_kill(self, job_id: str, reason: str) -> None:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None or job.terminal:
                return
            self._begin_kill(job, reason)

    def _begin_kill(self, job: ClusterJob, reason: str) -> str:
        """Under the lock: mark a running/suspended job Killed and signal it."""
        rt = self._runtime[job.id]
        rt.kill_requested = True
        suspended = job.state == SUSPENDED
        job.state = KILLED
        job.reason = reason
        job.exit_code = KILL_EXIT_STATUS
        self._persist_job(job)
        proc = rt.proc
        if proc and proc.poll() is None:
            if suspended:
                _signal_group(proc, signal.SIGCONT)
            _signal_group(proc, signal.SIGTERM)
            rt.force_timer = threading.Timer(
                self.settings.grace_seconds, _force_kill, args=(proc,))
            rt.force_timer.daemon = True
            rt.force_timer.start()
        return job.state

    def hold(self, job_id: str) -> str:
        with self._lock:
            job = self._require(job_id)
            if job.state != QUEUED:
                raise InvalidTransition(job.state, "hold")
            job.state = HELD
            self._persist_job(job)
            return job.state

    def release(self, job_id: str) -> str:
        with self._lock:
            job = self._require(job_id)
            if job.state != HELD:
                raise InvalidTransition(job.state, "release")
            job.state = QUEUED
            self._persist_job(job)
            return job.state

    def suspend(self, job_id: str) -> str:
        with self._lock:
            job = self._require(job_id)
            if job.state != RUNNING:
                raise InvalidTransition(job.state, "suspend")
            proc = self._runtime[job_id].proc
            if proc and proc.poll() is None:
                _signal_group(proc, signal.SIGSTOP)
            job.state = SUSPENDED
            self._persist_job(job)
            return job.state

    def resume(self, job_id: str) -> str:
        with self._lock:
            job = self._require(job_id)
            if job.state != SUSPENDED:
                raise InvalidTransition(job.state, "resume")
            proc = self._runtime[job_id].proc
            if proc and proc.poll() is None:
                _signal_group(proc, signal.SIGCONT)
            job.state = RUNNING
            self._persist_job(job)
            return job.state

    # ------------------------------------------------------------ queries

    def _require(self, job_id: str) -> ClusterJob:
        job = self._jobs.get(job_id)
        if job is None:
            raise UnknownJob(job_id)
        return job

    def get_job(self, job_id: str) -> ClusterJob:
        with self._lock:
            return self._require(job_id)

    def jobs(self) -> list[ClusterJob]:
        with self._lock:
            return sorted(self._jobs.values(), key=lambda j: j.seq)

    def query_status(self, job_id: Optional[str] = None) -> list[qstat.StatusRecord]:
        with self._lock:
            if job_id is not None:
                jobs = [self._require(job_id)]
            else:
                jobs = sorted(self._jobs.values(), key=lambda j: j.seq)
            return [self._status_record(j) for j in jobs]

    def _status_record(self, job: ClusterJob) -> qstat.StatusRecord:
        rec = qstat.StatusRecord(job.id)
        attrs = rec.attributes
        attrs["Job_Name"] = job.name
        attrs["Job_Owner"] = f"{job.owner}@{self.settings.server_name}"
        attrs["job_state"] = qstat.STATE_CODES[job.state]
        attrs["queue"] = job.queue
        attrs["server"] = self.settings.server_name
        attrs["ctime"] = time.ctime(job.submitted_at)
        attrs["Resource_List.ncpus"] = str(job.resources.cores)
        attrs["Resource_List.mem"] = qstat.format_kb(job.resources.memory)
        attrs["Resource_List.walltime"] = qstat.format_duration(job.resources.walltime)
        if job.node:
            attrs["exec_host"] = f"{job.node}/0"
        if job.started_at is not None:
            attrs["start_time"] = time.ctime(job.started_at)
            elapsed = (job.used.walltime_seconds if job.ended_at
                       else time.time() - job.started_at)
            attrs["resources_used.cput"] = qstat.format_duration(
                int(job.used.cpu_seconds))
            attrs["resources_used.mem"] = qstat.format_kb(job.used.peak_memory)
            attrs["resources_used.walltime"] = qstat.format_duration(int(elapsed))
        if job.ended_at is not None:
            attrs["comp_time"] = time.ctime(job.ended_at)
        if job.terminal and job.exit_code is not None:
            attrs["exit_status"] = str(job.exit_code)
        if job.reason:
            attrs["comment"] = f"terminated: {job.reason}"
        return rec

    def cluster_summary(self) -> dict:
        with self._lock:
            online = [n for n in self._nodes.values() if n.state == ONLINE]
            offline = [n for n in self._nodes.values() if n.state == OFFLINE]
            cores_total = sum(n.cores_total for n in online)
            cores_used = sum(n.cores_used for n in online)
            usage = shutil.disk_usage(str(self._store.root))
            return {
                "nodes_online": len(online),
                "nodes_offline": len(offline),
                "utilization": (cores_used / cores_total) if cores_total else 0.0,
                "jobs_running": sum(1 for j in self._jobs.values()
                                    if j.state in (RUNNING, SUSPENDED)),
                "jobs_queued": sum(1 for j in self._jobs.values()
                                   if j.state in (QUEUED, HELD)),
                "disk_available_bytes": usage.free,
            }

    # ------------------------------------------------------------ sampling

    def _sample_usage(self, now: float) -> None:
        for job in self._jobs.values():
            if job.state not in (RUNNING, SUSPENDED):
                continue
            if job.started_at is not None:
                job.used.walltime_seconds = now - job.started_at
            proc = self._runtime[job.id].proc
            if proc is None or proc.poll() is not None:
                continue
            try:
                root = psutil.Process(proc.pid)
                procs = [root] + root.children(recursive=True)
                cpu = 0.0
                rss = 0
                for p in procs:
                    with p.oneshot():
                        times = p.cpu_times()
                        cpu += times.user + times.system
                        rss += p.memory_info().rss
                job.used.cpu_seconds = max(job.used.cpu_seconds, cpu)
                job.used.peak_memory = max(job.used.peak_memory, rss)
            except (psutil.NoSuchProcess, psutil.AccessDenied):
                continue

    # ------------------------------------------------------------ admin

    def add_node(self, name: str, cores: int, memory: int) -> Node:
        with self._lock:
            if name in self._nodes:
                raise DuplicateName(name)
            node = Node(name, cores, memory)
            self._nodes[name] = node
            self._persist_node(node)
            return node

    def set_node_state(self, name: str, state: str) -> Node:
        if state not in (ONLINE, OFFLINE):
            raise ValueError(f"unknown node state {state!r}")
        with self._lock:
            node = self._nodes.get(name)
            if node is None:
                raise UnknownNode(name)
            node.state = state
            self._persist_node(node)
            return node

    def remove_node(self, name: str) -> None:
        with self._lock:
            node = self._nodes.get(name)
            if node is None:
                raise UnknownNode(name)
            if node.running:
                raise NodeBusy(name)
            del self._nodes[name]
            self._store.delete("nodes", name)

    def nodes(self) -> list[Node]:
        with self._lock:
            return [self._nodes[n] for n in sorted(self._nodes)]

    def create_queue(self, name: str, *, enabled: bool = True,
                     max_walltime: Optional[int] = None,
                     max_queued: Optional[int] = None,
                     default_request: Optional[ResourceRequest] = None) -> ClusterQueue:
        with self._lock:
            if name in self._queues:
                raise DuplicateName(name)
            q = ClusterQueue(name, enabled, max_walltime, max_queued,
                             default_request or ResourceRequest(queue=name))
            self._queues[name] = q
            self._persist_queue(q)
            return q

    def set_queue(self, name: str, **changes) -> ClusterQueue:
        with self._lock:
            q = self._queues.get(name)
            if q is None:
                raise UnknownQueue(name)
            for key in ("enabled", "max_walltime", "max_queued", "default_request"):
                if key in changes:
                    setattr(q, key, changes.pop(key))
            if changes:
                raise ValueError(f"unknown queue settings: {sorted(changes)}")
            self._persist_queue(q)
            return q

    def delete_queue(self, name: str) -> None:
        with self._lock:
            if name == self.settings.default_queue:
                raise DefaultQueueProtected(name)
            if name not in self._queues:
                raise UnknownQueue(name)
            if any(j.queue == name and not j.terminal for j in self._jobs.values()):
                raise QueueBusy(name)
            del self._queues[name]
            self._store.delete("queues", name)

    def queues(self) -> list[ClusterQueue]:
        with self._lock:
            return [self._queues[n] for n in sorted(self._queues)]

    def get_settings(self) -> ServerSettings:
        with self._lock:
            return replace(self.settings)

    def set_settings(self, *, tick_interval: Optional[float] = None,
                     default_queue: Optional[str] = None,
                     grace_seconds: Optional[float] = None) -> ServerSettings:
        with self._lock:
            if tick_interval is not None:
                if tick_interval <= 0:
                    raise ValueError("tick interval must be positive")
                self.settings.tick_interval = tick_interval
            if default_queue is not None:
                if default_queue not in self._queues:
                    raise UnknownQueue(default_queue)
                self.settings.default_queue = default_queue
            if grace_seconds is not None:
                if grace_seconds <= 0:
                    raise ValueError("grace interval must be positive")
                self.settings.grace_seconds = grace_seconds
            self._store.put("server", "settings", vars(self.settings))
            return replace(self.settings)

    # ------------------------------------------------------------ persistence

    def _persist_job(self, job: ClusterJob) -> None:
        self._store.put("cluster_jobs", job.id, _job_to_dict(job))

    def _persist_node(self, node: Node) -> None:
        self._store.put("nodes", node.name, {
            "name": node.name, "cores_total": node.cores_total,
            "memory_total": node.memory_total, "state": node.state})

    def _persist_queue(self, q: ClusterQueue) -> None:
        self._store.put("queues", q.name, {
            "name": q.name, "enabled": q.enabled,
            "max_walltime": q.max_walltime, "max_queued": q.max_queued,
            "default_request": vars(q.default_request)})


def _map_returncode(rc: int) -> int:
    """Shell-style exit status: signal deaths map to 128 + signal number."""
    return rc % 256 if rc >= 0 else 128 + (-rc)


def _signal_group(proc: subprocess.Popen, sig: int) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), sig)
    except (ProcessLookupError, PermissionError):
        try:
            proc.send_signal(sig)
        except ProcessLookupError:
            pass


def _force_kill(proc: subprocess.Popen) -> None:
    if proc.poll() is None:
        _signal_group(proc, signal.SIGKILL)


def _job_to_dict(job: ClusterJob) -> dict:
    return {
        "id": job.id, "name": job.name, "owner": job.owner, "queue": job.queue,
        "resources": vars(job.resources), "command": job.command,
        "working_dir": job.working_dir, "env": job.env, "state": job.state,
        "reason": job.reason, "node": job.node, "exit_code": job.exit_code,
        "used": vars(job.used), "submitted_at": job.submitted_at,
        "started_at": job.started_at, "ended_at": job.ended_at,
        "epilogue_fired": job.epilogue_fired,
    }


def _job_from_dict(d: dict) -> ClusterJob:
    return ClusterJob(
        id=d["id"], name=d["name"], owner=d["owner"], queue=d["queue"],
        resources=ResourceRequest(**d["resources"]), command=d["command"],
        working_dir=d["working_dir"], env=d.get("env", {}),
        state=d.get("state", QUEUED), reason=d.get("reason"),
        node=d.get("node"), exit_code=d.get("exit_code"),
        used=ResourcesUsed(**d.get("used", {})),
        submitted_at=d.get("submitted_at", 0.0),
        started_at=d.get("started_at"), ended_at=d.get("ended_at"),
        epilogue_fired=d.get("epilogue_fired", False),
    )
