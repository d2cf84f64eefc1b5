"""Builds and wires the full service graph over one data directory."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import psutil

from .auth import AuthService, PermissionService
from .executor import ClusterExecutor, ServerSettings
from .history import DEFAULT_POLL_INTERVAL, HistoryService
from .orchestrator import Orchestrator
from .store import JsonStore
from .workflows import WorkflowService


@dataclass
class Services:
    data_dir: Path
    store: JsonStore
    auth: AuthService
    perms: PermissionService
    executor: ClusterExecutor
    history: HistoryService
    workflows: WorkflowService
    orchestrator: Orchestrator

    def start(self) -> None:
        self.executor.start()
        self.history.start()

    def stop(self) -> None:
        self.history.stop()
        self.executor.stop()


def build_services(data_dir: Path | str,
                   poll_interval: float = DEFAULT_POLL_INTERVAL,
                   tick_interval: float = 0.5,
                   settings: Optional[ServerSettings] = None) -> Services:
    """Construct every service, unstarted, with stored state loaded.

    A cluster with no nodes gets one default node sized to the host so a
    fresh install can run jobs immediately.
    """
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    store = JsonStore(data_dir)
    auth = AuthService(store)
    perms = PermissionService(store, auth)
    settings = settings or ServerSettings(tick_interval=tick_interval)
    executor = ClusterExecutor(store, settings)
    if not executor.nodes():
        executor.add_node("node1", os.cpu_count() or 4,
                          psutil.virtual_memory().total)
    history = HistoryService(store, poll_interval)
    history.attach_executor(executor)
    workflows = WorkflowService(store, data_dir, perms, auth)
    orchestrator = Orchestrator(store, data_dir, executor, workflows,
                                history, perms, auth)
    return Services(data_dir=data_dir, store=store, auth=auth, perms=perms,
                    executor=executor, history=history, workflows=workflows,
                    orchestrator=orchestrator)
