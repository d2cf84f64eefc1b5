"""Brute-force reference evaluator for conditional stage graphs.

Deliberately independent of the package internals: works on plain dicts
and strings, resolves stages in topological order, and derives the
ran-set, skipped-set, and job verdict from first principles. Used to
cross-check the engine on randomized graphs.
"""

from __future__ import annotations

KILLED = "killed"
KILL_CODE = 271


def _matches(kind: str, codes, exit_code: int) -> bool:
    if kind == "success":
        return exit_code == 0
    if kind == "failure":
        return exit_code != 0
    if kind == "exit-codes":
        return exit_code in codes
    if kind == "always":
        return True
    raise ValueError(kind)


def _topo(stages, edges):
    order = []
    remaining = set(stages)
    while remaining:
        for name in sorted(remaining):
            if all(up in order for up, down, _, _ in edges if down == name
                   and up in stages):
                order.append(name)
                remaining.discard(name)
                break
        else:
            raise ValueError("cycle")
    return order


def evaluate(stages: dict, edges: list) -> tuple[set, set, str]:
    """Reference semantics for one complete run.

    ``stages`` maps stage name to its would-be outcome: an int exit code
    or the string "killed". ``edges`` holds (upstream, downstream, kind,
    codes) tuples. Returns (ran set, skipped set, verdict string).

    A stage runs iff every one of its incoming edges is satisfied; an
    edge is satisfied iff its upstream ran and the upstream's effective
    exit code (271 for kills) matches the condition. A stage that never
    ran satisfies nothing, not even "always" edges.

    The job fails iff some stage that ran either (a) has outgoing edges
    and its code matches none of them, or (b) is a leaf and its code is
    nonzero. Skips alone never fail a job.
    """
    ran: set = set()
    skipped: set = set()
    code: dict = {}

    for name in _topo(stages, edges):
        in_edges = [(u, k, c) for u, d, k, c in edges if d == name]
        ok = all(u in ran and _matches(k, c, code[u]) for u, k, c in in_edges)
        if ok:
            ran.add(name)
            outcome = stages[name]
            code[name] = KILL_CODE if outcome == KILLED else int(outcome)
        else:
            skipped.add(name)

    failed = False
    for name in ran:
        out_edges = [(k, c) for u, d, k, c in edges if u == name]
        if out_edges:
            if not any(_matches(k, c, code[name]) for k, c in out_edges):
                failed = True
        elif code[name] != 0:
            failed = True
    return ran, skipped, "failed" if failed else "completed"
