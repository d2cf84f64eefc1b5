"""REST surface over every service, plus the error-to-status mapping.

All mutating and reading endpoints require a bearer token. Object reads
the caller may not see at all produce 404 rather than 403 so URLs do not
leak which ids exist. The exception-to-status table is data; a test
asserts every domain error class resolves through it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

from fastapi import Depends, FastAPI, File, Form, Header, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import errors as err
from .auth import PermissionLevel, User
from .bootstrap import Services
from .model import workflow_to_dict

ERROR_STATUS: dict[type, int] = {
    # malformed or impossible requests
    err.MissingRequiredParameter: 400,
    err.UnknownParameter: 400,
    err.InvalidWorkflow: 400,
    err.InvalidManifest: 400,
    err.CorruptArchive: 400,
    err.MissingScript: 400,
    err.BatchFileError: 400,
    err.RowError: 400,
    err.InvalidChange: 400,
    err.ResourceLimitExceeded: 400,
    err.IoFailure: 400,
    err.DuplicateName: 400,
    err.DuplicateUser: 400,
    err.DuplicateGroup: 400,
    # authentication
    err.Unauthenticated: 401,
    err.InvalidCredentials: 401,
    # authorization
    err.PermissionDenied: 403,
    err.AccountDisabled: 403,
    # unknown objects (including unauthorized reads, by design)
    err.UnknownWorkflow: 404,
    err.UnknownProfile: 404,
    err.UnknownJob: 404,
    err.UnknownStage: 404,
    err.UnknownQueue: 404,
    err.UnknownNode: 404,
    err.UnknownUser: 404,
    err.UnknownGroup: 404,
    err.MissingBlob: 404,
    # valid requests against the wrong state
    err.InvalidTransition: 409,
    err.AlreadyTerminal: 409,
    err.JobTerminal: 409,
    err.JobRunning: 409,
    err.UpstreamIncomplete: 409,
    err.QueueDisabled: 409,
    err.QueueFull: 409,
    err.QueueBusy: 409,
    err.NodeBusy: 409,
    err.DefaultQueueProtected: 409,
    err.DuplicateEvent: 409,
}


def status_for(exc: BaseException) -> int:
    for klass in type(exc).__mro__:
        if klass in ERROR_STATUS:
            return ERROR_STATUS[klass]
    return 500


def _parse_level(text: str) -> PermissionLevel:
    try:
        return PermissionLevel.parse(text)
    except ValueError as exc:
        raise err.InvalidChange(str(exc)) from None


class LoginBody(BaseModel):
    username: str
    password: str


class SubmitJobBody(BaseModel):
    workflow_id: str
    inputs: dict[str, Any] = {}
    profile_id: Optional[str] = None


class RepeatBody(BaseModel):
    from_stage: Optional[str] = None


class ShareBody(BaseModel):
    user: Optional[str] = None
    group: Optional[str] = None
    level: str = "view"


class AlterBody(BaseModel):
    changes: dict[str, Any]


class DecideBody(BaseModel):
    approve: bool


class NodeBody(BaseModel):
    name: str
    cores: int
    memory: int


class NodeStateBody(BaseModel):
    state: str


class QueueBody(BaseModel):
    name: Optional[str] = None
    enabled: Optional[bool] = None
    max_walltime: Optional[int] = None
    max_queued: Optional[int] = None


class SettingsBody(BaseModel):
    tick_interval: Optional[float] = None
    default_queue: Optional[str] = None
    grace_seconds: Optional[float] = None


class UserBody(BaseModel):
    username: str
    password: str
    is_admin: bool = False


class UserUpdateBody(BaseModel):
    password: Optional[str] = None
    is_admin: Optional[bool] = None
    disabled: Optional[bool] = None


class GroupBody(BaseModel):
    name: str


class MemberBody(BaseModel):
    username: str
    member: bool = True


class ProfileBody(BaseModel):
    name: str
    values: dict[str, Any] = {}


def create_app(services: Services,
               frontend_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="stagework", docs_url=None, redoc_url=None)
    auth = services.auth
    orch = services.orchestrator
    wfs = services.workflows
    executor = services.executor

    # ------------------------------------------------------------- plumbing

    @app.exception_handler(err.StageworkError)
    async def domain_error(_req: Request, exc: err.StageworkError):
        return JSONResponse(status_code=status_for(exc),
                            content={"error": type(exc).__name__,
                                     "detail": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def body_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": "ValidationError",
                                     "detail": str(exc.errors()[:3])})

    def current_user(authorization: Optional[str] = Header(None)) -> User:
        if not authorization or not authorization.startswith("Bearer "):
            raise err.Unauthenticated()
        return auth.resolve(authorization[len("Bearer "):].strip())

    def admin_user(user: User = Depends(current_user)) -> User:
        if not user.is_admin:
            raise err.PermissionDenied("administrator access required")
        return user

    def bearer_token(authorization: Optional[str] = Header(None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise err.Unauthenticated()
        return authorization[len("Bearer "):].strip()

    # ----------------------------------------------------------------- auth

    @app.post("/api/auth/login")
    def login(body: LoginBody):
        token = auth.authenticate(body.username, body.password)
        user = auth.get_user(body.username)
        return {"token": token, "expires_in": auth.token_ttl,
                "username": user.username, "is_admin": user.is_admin}

    @app.post("/api/auth/logout")
    def logout(token: str = Depends(bearer_token)):
        auth.revoke(token)
        return {"ok": True}

    @app.get("/api/users/me")
    def whoami(user: User = Depends(current_user)):
        return _user_dict(user)

    # -------------------------------------------------------------- cluster

    @app.get("/api/cluster/summary")
    def cluster_summary(user: User = Depends(current_user)):
        summary = executor.cluster_summary()
        summary["nodes"] = [_node_dict(n) for n in executor.nodes()]
        summary["queue"] = [
            _cluster_job_dict(j) for j in executor.jobs() if not j.terminal]
        return summary

    @app.get("/api/cluster/nodes")
    def list_nodes(user: User = Depends(current_user)):
        return [_node_dict(n) for n in executor.nodes()]

    @app.post("/api/cluster/nodes", status_code=201)
    def add_node(body: NodeBody, user: User = Depends(admin_user)):
        return _node_dict(executor.add_node(body.name, body.cores, body.memory))

    @app.put("/api/cluster/nodes/{name}")
    def set_node(name: str, body: NodeStateBody,
                 user: User = Depends(admin_user)):
        if body.state not in ("online", "offline"):
            raise err.InvalidChange("state")
        return _node_dict(executor.set_node_state(name, body.state))

    @app.delete("/api/cluster/nodes/{name}")
    def remove_node(name: str, user: User = Depends(admin_user)):
        executor.remove_node(name)
        return {"ok": True}

    @app.get("/api/cluster/queues")
    def list_queues(user: User = Depends(current_user)):
        return [_queue_dict(q) for q in executor.queues()]

    @app.post("/api/cluster/queues", status_code=201)
    def create_queue(body: QueueBody, user: User = Depends(admin_user)):
        if not body.name:
            raise err.InvalidChange("name")
        q = executor.create_queue(body.name,
                                  enabled=True if body.enabled is None
                                  else body.enabled,
                                  max_walltime=body.max_walltime,
                                  max_queued=body.max_queued)
        return _queue_dict(q)

    @app.put("/api/cluster/queues/{name}")
    def set_queue(name: str, body: QueueBody,
                  user: User = Depends(admin_user)):
        changes: dict[str, Any] = {}
        if body.enabled is not None:
            changes["enabled"] = body.enabled
        if body.max_walltime is not None:
            changes["max_walltime"] = body.max_walltime or None
        if body.max_queued is not None:
            changes["max_queued"] = body.max_queued or None
        return _queue_dict(executor.set_queue(name, **changes))

    @app.delete("/api/cluster/queues/{name}")
    def delete_queue(name: str, user: User = Depends(admin_user)):
        executor.delete_queue(name)
        return {"ok": True}

    @app.get("/api/cluster/settings")
    def get_settings(user: User = Depends(admin_user)):
        return vars(executor.get_settings())

    @app.put("/api/cluster/settings")
    def put_settings(body: SettingsBody, user: User = Depends(admin_user)):
        return vars(executor.set_settings(
            tick_interval=body.tick_interval,
            default_queue=body.default_queue,
            grace_seconds=body.grace_seconds))

    # ------------------------------------------------------------ workflows

    @app.get("/api/workflows")
    def list_workflows(user: User = Depends(current_user)):
        return [workflow_to_dict(wf) for wf in wfs.list_visible(user)]

    @app.post("/api/workflows", status_code=201)
    def create_workflow(definition: dict, user: User = Depends(current_user)):
        return workflow_to_dict(wfs.create(definition, user.username))

    @app.get("/api/workflows/{wf_id}")
    def get_workflow(wf_id: str, user: User = Depends(current_user)):
        return workflow_to_dict(wfs.get(wf_id, user))

    @app.put("/api/workflows/{wf_id}")
    def update_workflow(wf_id: str, definition: dict,
                        user: User = Depends(current_user)):
        return workflow_to_dict(wfs.update(wf_id, definition, user))

    @app.delete("/api/workflows/{wf_id}")
    def delete_workflow(wf_id: str, user: User = Depends(current_user)):
        wfs.delete(wf_id, user)
        return {"ok": True}

    @app.post("/api/workflows/{wf_id}/share")
    def share_workflow(wf_id: str, body: ShareBody,
                       user: User = Depends(current_user)):
        level = _parse_level(body.level)
        wfs.share(wf_id, user, target_user=body.user,
                  target_group=body.group, level=level)
        return {"ok": True}

    @app.get("/api/workflows/{wf_id}/export")
    def export_workflow(wf_id: str, user: User = Depends(current_user)):
        data = wfs.export_archive(wf_id, user)
        return Response(content=data, media_type="application/zip",
                        headers={"Content-Disposition":
                                 f'attachment; filename="{wf_id}.zip"'})

    @app.post("/api/workflows/import", status_code=201)
    async def import_workflow(file: UploadFile = File(...),
                              user: User = Depends(current_user)):
        data = await file.read()
        return workflow_to_dict(wfs.import_archive(data, user.username))

    @app.get("/api/workflows/{wf_id}/scripts")
    def list_scripts(wf_id: str, user: User = Depends(current_user)):
        return wfs.list_scripts(wf_id, user)

    @app.get("/api/workflows/{wf_id}/scripts/{name}")
    def get_script(wf_id: str, name: str, user: User = Depends(current_user)):
        content = wfs.get_script(wf_id, name, user)
        return Response(content=content, media_type="text/plain")

    @app.put("/api/workflows/{wf_id}/scripts/{name}")
    async def put_script(wf_id: str, name: str, request: Request,
                         user: User = Depends(current_user)):
        content = await request.body()
        wfs.put_script(wf_id, name, content, user)
        return {"ok": True}

    @app.get("/api/workflows/{wf_id}/profiles")
    def list_profiles(wf_id: str, user: User = Depends(current_user)):
        return [_profile_dict(p) for p in wfs.list_profiles(wf_id, user)]

    @app.post("/api/workflows/{wf_id}/profiles", status_code=201)
    def create_profile(wf_id: str, body: ProfileBody,
                       user: User = Depends(current_user)):
        return _profile_dict(wfs.create_profile(wf_id, body.name,
                                                body.values, user))

    @app.get("/api/workflows/{wf_id}/profiles/{pid}")
    def get_profile(wf_id: str, pid: str, user: User = Depends(current_user)):
        return _profile_dict(wfs.get_profile(wf_id, pid, user))

    @app.put("/api/workflows/{wf_id}/profiles/{pid}")
    def update_profile(wf_id: str, pid: str, body: ProfileBody,
                       user: User = Depends(current_user)):
        return _profile_dict(wfs.update_profile(wf_id, pid, body.name,
                                                body.values, user))

    @app.delete("/api/workflows/{wf_id}/profiles/{pid}")
    def delete_profile(wf_id: str, pid: str,
                       user: User = Depends(current_user)):
        wfs.delete_profile(wf_id, pid, user)
        return {"ok": True}

    # ----------------------------------------------------------------- jobs

    @app.get("/api/jobs")
    def list_jobs(user: User = Depends(current_user)):
        return orch.list_jobs(user)

    @app.post("/api/jobs", status_code=201)
    def submit_job(body: SubmitJobBody, user: User = Depends(current_user)):
        job = orch.submit_workflow_job(body.workflow_id, body.inputs, user,
                                       profile_id=body.profile_id)
        return orch.get_job(job.id, user)

    @app.post("/api/jobs/batch", status_code=201)
    async def submit_batch(workflow_id: str = Form(...),
                           file: UploadFile = File(...),
                           user: User = Depends(current_user)):
        text = (await file.read()).decode("utf-8", errors="replace")
        ids = orch.batch_submit(workflow_id, text, user)
        return {"job_ids": ids}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str, user: User = Depends(current_user)):
        return orch.get_job(job_id, user)

    @app.post("/api/jobs/{job_id}/cancel")
    def cancel_job(job_id: str, user: User = Depends(current_user)):
        return orch.cancel_job(job_id, user)

    @app.post("/api/jobs/{job_id}/hold")
    def hold_job(job_id: str, user: User = Depends(current_user)):
        return orch.hold_job(job_id, user)

    @app.post("/api/jobs/{job_id}/release")
    def release_job(job_id: str, user: User = Depends(current_user)):
        return orch.release_job(job_id, user)

    @app.post("/api/jobs/{job_id}/repeat", status_code=201)
    def repeat_job(job_id: str, body: Optional[RepeatBody] = None,
                   user: User = Depends(current_user)):
        from_stage = body.from_stage if body else None
        job = orch.repeat_job(job_id, user, from_stage)
        return orch.get_job(job.id, user)

    @app.delete("/api/jobs/{job_id}")
    def delete_job(job_id: str, user: User = Depends(current_user)):
        orch.delete_job(job_id, user)
        return {"ok": True}

    @app.post("/api/jobs/{job_id}/share")
    def share_job(job_id: str, body: ShareBody,
                  user: User = Depends(current_user)):
        if not body.user:
            raise err.InvalidChange("user")
        orch.share_job(job_id, user, body.user,
                       _parse_level(body.level))
        return {"ok": True}

    @app.post("/api/jobs/{job_id}/alterations", status_code=201)
    def request_alteration(job_id: str, body: AlterBody,
                           user: User = Depends(current_user)):
        request = orch.request_alteration(job_id, body.changes, user)
        return vars(request)

    @app.get("/api/alterations")
    def list_alterations(user: User = Depends(current_user)):
        return orch.list_alterations(user)

    @app.post("/api/alterations/{request_id}/decide")
    def decide_alteration(request_id: str, body: DecideBody,
                          user: User = Depends(admin_user)):
        return vars(orch.decide_alteration(request_id, body.approve, user))

    @app.get("/api/jobs/{job_id}/files/{path:path}")
    def job_file(job_id: str, path: str, user: User = Depends(current_user)):
        target = orch.job_file(job_id, path, user)
        return FileResponse(target, filename=target.name)

    # ------------------------------------------------------- users & groups

    @app.get("/api/users")
    def list_users(user: User = Depends(admin_user)):
        return [_user_dict(u) for u in auth.list_users()]

    @app.post("/api/users", status_code=201)
    def create_user(body: UserBody, user: User = Depends(admin_user)):
        return _user_dict(auth.create_user(body.username, body.password,
                                           body.is_admin))

    @app.put("/api/users/{username}")
    def update_user(username: str, body: UserUpdateBody,
                    user: User = Depends(admin_user)):
        if body.password is not None:
            auth.set_password(username, body.password)
        if body.is_admin is not None:
            auth.set_admin(username, body.is_admin)
        if body.disabled is not None:
            auth.set_disabled(username, body.disabled)
        return _user_dict(auth.get_user(username))

    @app.get("/api/groups")
    def list_groups(user: User = Depends(current_user)):
        return auth.list_groups()

    @app.post("/api/groups", status_code=201)
    def create_group(body: GroupBody, user: User = Depends(current_user)):
        return auth.create_group(body.name, user.username)

    @app.put("/api/groups/{name}/members")
    def set_membership(name: str, body: MemberBody,
                       user: User = Depends(current_user)):
        return auth.set_membership(name, body.username, body.member, user)

    @app.delete("/api/groups/{name}")
    def delete_group(name: str, user: User = Depends(current_user)):
        auth.delete_group(name, user)
        return {"ok": True}

    # ------------------------------------------------------------ frontend

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True),
                  name="frontend")

    return app


def _user_dict(user: User) -> dict:
    return {"username": user.username, "is_admin": user.is_admin,
            "disabled": user.disabled, "groups": sorted(user.groups)}


def _node_dict(node) -> dict:
    return {"name": node.name, "state": node.state,
            "cores_total": node.cores_total, "cores_used": node.cores_used,
            "memory_total": node.memory_total, "memory_used": node.memory_used}


def _queue_dict(q) -> dict:
    return {"name": q.name, "enabled": q.enabled,
            "max_walltime": q.max_walltime, "max_queued": q.max_queued}


def _profile_dict(p) -> dict:
    return {"id": p.id, "workflow_id": p.workflow_id, "name": p.name,
            "values": p.values}


def _cluster_job_dict(job) -> dict:
    return {"id": job.id, "name": job.name, "owner": job.owner,
            "state": job.state, "queue": job.queue, "node": job.node,
            "cores": job.resources.cores, "memory": job.resources.memory,
            "walltime": job.resources.walltime}
