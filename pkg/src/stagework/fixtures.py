"""Ready-made example workflows, one per dependency pattern.

Each function returns ``(definition, scripts)``: a workflow definition
dict ready for WorkflowService.create and a map of script name to
content. The commands are stub shell one-liners so every example runs
in well under a second on any POSIX host.
"""

from __future__ import annotations

from typing import Optional

_SH = "#!/bin/sh\n"


def _stage(name: str, command: str, *, params: Optional[list] = None,
           deps: Optional[list] = None, outputs: Optional[list] = None,
           scripts: Optional[list] = None, walltime: int = 60) -> dict:
    return {
        "name": name,
        "command_template": command,
        "parameters": params or [],
        "dependencies": deps or [],
        "expected_outputs": outputs or [],
        "scripts": scripts or [],
        "resources": {"cores": 1, "memory": 64 << 20, "walltime": walltime,
                      "queue": ""},
    }


def _dep(upstream: str, kind: str, codes: Optional[list] = None) -> dict:
    condition: dict = {"kind": kind}
    if codes is not None:
        condition["exit_codes"] = codes
    return {"upstream": upstream, "condition": condition}


def _num(name: str, default=None, required: bool = False) -> dict:
    return {"name": name, "kind": "number", "required": required,
            "default": default}


def single_echo() -> tuple[dict, dict]:
    """One stage echoing a text parameter."""
    definition = {
        "name": "echo-text",
        "description": "Smallest possible workflow: one stage, one parameter.",
        "stages": [_stage("say", "echo ${message}", params=[
            {"name": "message", "kind": "text", "required": False,
             "default": "hi"}])],
    }
    return definition, {}


def branching_pair() -> tuple[dict, dict]:
    """A probe stage with one branch on success and another on failure."""
    definition = {
        "name": "branch-on-outcome",
        "description": "Runs the ok branch when the probe succeeds, the "
                       "recovery branch when it fails.",
        "stages": [
            _stage("probe", "exit ${probe_exit}",
                   params=[_num("probe_exit", default=0)]),
            _stage("on-ok", "echo took-ok-branch",
                   deps=[_dep("probe", "success")]),
            _stage("on-fail", "echo took-recovery-branch",
                   deps=[_dep("probe", "failure")]),
        ],
    }
    return definition, {}


def exit_code_router() -> tuple[dict, dict]:
    """Routes on the probe's specific exit code (1 or 2)."""
    definition = {
        "name": "route-by-exit-code",
        "description": "Dispatches to one of two handlers keyed on the "
                       "probe's exit code; any other code fails the job.",
        "stages": [
            _stage("probe", "exit ${probe_exit}",
                   params=[_num("probe_exit", default=1)]),
            _stage("handle-one", "echo handled-one",
                   deps=[_dep("probe", "exit-codes", [1])]),
            _stage("handle-two", "echo handled-two",
                   deps=[_dep("probe", "exit-codes", [2])]),
        ],
    }
    return definition, {}


def gated_fan_join() -> tuple[dict, dict]:
    """Fan out to two parallel stages, join, then gate on a magic exit code."""
    definition = {
        "name": "fan-join-gate",
        "description": "Two parallel middle stages joined by a gate whose "
                       "exit code 5 admits the final stage.",
        "stages": [
            _stage("setup", "echo setup-done > setup.out",
                   outputs=["setup.out"]),
            _stage("left", "sleep ${pause} && echo left-done > left.out",
                   params=[_num("pause", default=0)],
                   deps=[_dep("setup", "success")], outputs=["left.out"]),
            _stage("right", "sleep ${pause} && echo right-done > right.out",
                   params=[_num("pause", default=0)],
                   deps=[_dep("setup", "success")], outputs=["right.out"]),
            _stage("gate", "exit ${gate_exit}",
                   params=[_num("gate_exit", default=5)],
                   deps=[_dep("left", "success"), _dep("right", "success")]),
            _stage("final", "echo final-done > final.out",
                   deps=[_dep("gate", "exit-codes", [5])],
                   outputs=["final.out"]),
        ],
    }
    return definition, {}


def docking_pipeline(break_stage: Optional[str] = None) -> tuple[dict, dict]:
    """Four chained stub stages shaped like a small docking run.

    ``break_stage`` names a stage whose script should skip writing its
    declared output, which downgrades that stage to a missing-output
    failure.
    """
    scripts = {
        "prepare_receptor.sh": _SH + "echo receptor-model > receptor.pdbqt\n",
        "prepare_ligand.sh": _SH + "echo ligand-model > ligand.pdbqt\n",
        "make_grid.sh": _SH + "cat receptor.pdbqt ligand.pdbqt > grid.maps\n",
        "run_dock.sh": _SH + 'echo "poses exhaustiveness=$1" > poses.dlg\n',
    }
    outputs = {
        "prepare-receptor": "receptor.pdbqt",
        "prepare-ligand": "ligand.pdbqt",
        "make-grid": "grid.maps",
        "dock": "poses.dlg",
    }
    if break_stage is not None:
        script = {
            "prepare-receptor": "prepare_receptor.sh",
            "prepare-ligand": "prepare_ligand.sh",
            "make-grid": "make_grid.sh",
            "dock": "run_dock.sh",
        }[break_stage]
        scripts[script] = _SH + "true\n"  # runs fine, writes nothing

    definition = {
        "name": "dock-stub",
        "description": "Receptor and ligand preparation, grid build, and a "
                       "docking step, all as instant stub scripts.",
        "stages": [
            _stage("prepare-receptor", "sh prepare_receptor.sh",
                   outputs=[outputs["prepare-receptor"]],
                   scripts=["prepare_receptor.sh"]),
            _stage("prepare-ligand", "sh prepare_ligand.sh",
                   deps=[_dep("prepare-receptor", "success")],
                   outputs=[outputs["prepare-ligand"]],
                   scripts=["prepare_ligand.sh"]),
            _stage("make-grid", "sh make_grid.sh",
                   deps=[_dep("prepare-ligand", "success")],
                   outputs=[outputs["make-grid"]],
                   scripts=["make_grid.sh"]),
            _stage("dock", "sh run_dock.sh ${exhaustiveness}",
                   params=[_num("exhaustiveness", default=8)],
                   deps=[_dep("make-grid", "success")],
                   outputs=[outputs["dock"]],
                   scripts=["run_dock.sh"]),
        ],
    }
    return definition, scripts


def relaxation_chain() -> tuple[dict, dict]:
    """Three chained stages mimicking minimize/equilibrate/produce runs."""
    definition = {
        "name": "relax-stub",
        "description": "A linear simulation-style chain whose stages hand "
                       "files forward and append to a shared log.",
        "stages": [
            _stage("minimize",
                   "echo minimized steps=${steps} > system.gro && "
                   "echo minimize >> trace.log",
                   params=[_num("steps", default=100)],
                   outputs=["system.gro"]),
            _stage("equilibrate",
                   "cat system.gro > equil.gro && echo equilibrate >> trace.log",
                   deps=[_dep("minimize", "success")],
                   outputs=["equil.gro"]),
            _stage("produce",
                   "cat equil.gro > traj.xtc && echo produce >> trace.log",
                   deps=[_dep("equilibrate", "success")],
                   outputs=["traj.xtc"]),
        ],
    }
    return definition, {}


ALL_EXAMPLES = {
    "echo-text": single_echo,
    "branch-on-outcome": branching_pair,
    "route-by-exit-code": exit_code_router,
    "fan-join-gate": gated_fan_join,
    "dock-stub": docking_pipeline,
    "relax-stub": relaxation_chain,
}
