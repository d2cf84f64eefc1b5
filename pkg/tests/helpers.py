"""Shared test utilities: random graph/workflow generators and a
harness that drives the dependency engine against assigned outcomes."""

from __future__ import annotations

import random
import string

from stagework import model
from stagework.depgraph import DependencyGraph, StageOutcome, build_graph

from dag_oracle import KILLED

CONDITION_KINDS = ("success", "failure", "exit-codes", "always")


def random_case(rng: random.Random, max_stages: int = 5):
    """A random DAG with assigned outcomes, in oracle form.

    Returns (stages, edges) where stages maps name -> exit code or
    "killed" and edges is a list of (up, down, kind, codes) tuples.
    Edges only go from lower to higher index, so the graph is acyclic.
    """
    n = rng.randint(1, max_stages)
    names = [f"s{i}" for i in range(n)]
    stages = {}
    for name in names:
        if rng.random() < 0.15:
            stages[name] = KILLED
        else:
            stages[name] = rng.choice((0, 0, 0, 1, 2, 3, 5))
    edges = []
    for j in range(1, n):
        for i in range(j):
            if rng.random() < 0.5:
                kind = rng.choice(CONDITION_KINDS)
                codes = ()
                if kind == "exit-codes":
                    codes = tuple(sorted(rng.sample(range(6), rng.randint(1, 3))))
                edges.append((names[i], names[j], kind, codes))
    return stages, edges


def case_to_workflow(stages: dict, edges: list) -> model.Workflow:
    """Build a real workflow whose graph mirrors an oracle case."""
    by_stage: dict = {name: [] for name in stages}
    for up, down, kind, codes in edges:
        by_stage[down].append(model.Dependency(
            upstream=up,
            condition=model.DependencyCondition(
                kind=model.ConditionKind(kind), exit_codes=frozenset(codes)),
        ))
    wf_stages = [
        model.Stage(name=name, command_template="true",
                    dependencies=by_stage[name])
        for name in stages
    ]
    return model.Workflow(name="generated", owner="t", stages=wf_stages)


def drive_engine(graph: DependencyGraph, stages: dict,
                 rng: random.Random) -> tuple[set, set, str]:
    """Run a graph to completion, resolving ready stages in random order
    with each stage's assigned outcome. Returns (executed, skipped,
    verdict) in oracle form."""
    while not graph.all_terminal():
        ready = list(graph.ready_stages())
        assert ready, "engine stalled with non-terminal stages"
        name = rng.choice(ready)
        graph.mark_submitted(name)
        graph.mark_running(name)
        assigned = stages[name]
        if assigned == KILLED:
            outcome = StageOutcome.killed("test")
        else:
            outcome = (StageOutcome.succeeded(assigned) if assigned == 0
                       else StageOutcome.failed(assigned))
        graph.on_stage_terminal(name, outcome)
    executed = set(graph.executed_stages())
    skipped = set(graph.skipped_stages())
    verdict = graph.job_verdict()
    return executed, skipped, "failed" if verdict.is_failed else "completed"


def engine_result(stages: dict, edges: list, seed: int) -> tuple[set, set, str]:
    graph = build_graph(case_to_workflow(stages, edges))
    return drive_engine(graph, stages, random.Random(seed))


def random_tree(root, rng: random.Random, max_entries: int = 12) -> None:
    """Populate a directory with random nested files and symlinks."""
    root.mkdir(parents=True, exist_ok=True)
    dirs = [root]
    files = []
    for i in range(rng.randint(1, max_entries)):
        kind = rng.random()
        parent = rng.choice(dirs)
        name = "".join(rng.choices(string.ascii_lowercase, k=6)) + str(i)
        if kind < 0.2:
            new = parent / name
            new.mkdir()
            dirs.append(new)
        elif kind < 0.3 and files:
            (parent / name).symlink_to(rng.choice(files).name)
        else:
            payload = bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 512)))
            path = parent / name
            path.write_bytes(payload)
            files.append(path)


def tree_digest(root) -> dict:
    """Map of relative path -> (kind, content) for tree comparison."""
    out = {}
    for path in sorted(root.rglob("*")):
        rel = path.relative_to(root).as_posix()
        if path.is_symlink():
            out[rel] = ("symlink", str(path.readlink()))
        elif path.is_dir():
            out[rel] = ("dir", "")
        else:
            out[rel] = ("file", path.read_bytes())
    return out


def wait_until(predicate, timeout: float = 15.0, interval: float = 0.02):
    """Poll until predicate() is truthy; fail the test on timeout."""
    import time
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(interval)
    raise AssertionError("condition not reached within %.1fs" % timeout)
