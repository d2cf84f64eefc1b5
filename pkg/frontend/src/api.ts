import type {
  Alteration, ClusterSummary, Group, JobDocument, JobSummary, LoginResponse,
  NodeInfo, Profile, QueueInfo, ServerSettings, ShareLevel, User, Workflow,
} from "./types.js";

export class ApiFailure extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ApiFailure";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

interface TokenStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const TOKEN_KEY = "stagework.token";
const IDENTITY_KEY = "stagework.identity";

export interface ClientOptions {
  fetchFn?: FetchLike;
  storage?: TokenStore;
  base?: string;
  /** Called whenever the server answers 401 with a token attached. */
  onUnauthenticated?: () => void;
}

interface RequestOptions {
  json?: unknown;
  body?: BodyInit;
  headers?: Record<string, string>;
  /** Expected payload: defaults to "json". */
  as?: "json" | "text" | "blob" | "none";
}

export class ApiClient {
  private fetchFn: FetchLike;
  private storage: TokenStore;
  private base: string;
  onUnauthenticated: () => void;

  constructor(options: ClientOptions = {}) {
    this.fetchFn = options.fetchFn ?? ((url, init) => fetch(url, init));
    this.storage = options.storage ?? window.localStorage;
    this.base = options.base ?? "";
    this.onUnauthenticated = options.onUnauthenticated ?? (() => undefined);
  }

  get token(): string | null {
    return this.storage.getItem(TOKEN_KEY);
  }

  get identity(): { username: string; is_admin: boolean } | null {
    const raw = this.storage.getItem(IDENTITY_KEY);
    return raw ? JSON.parse(raw) : null;
  }

  get authenticated(): boolean {
    return this.token !== null;
  }

  private async request<T>(
    method: string,
    path: string,
    options: RequestOptions = {},
  ): Promise<T> {
    const headers: Record<string, string> = { ...options.headers };
    const token = this.token;
    if (token) headers["Authorization"] = `Bearer ${token}`;
    let body = options.body;
    if (options.json !== undefined) {
      headers["Content-Type"] = "application/json";
      body = JSON.stringify(options.json);
    }
    const response = await this.fetchFn(this.base + path, {
      method,
      headers,
      body,
    });
    if (!response.ok) {
      const failure = await this.toFailure(response);
      // Notify once per session loss: concurrent requests all come back 401,
      // but only the first still matches the stored token.
      if (failure.status === 401 && token && this.token === token) {
        this.clearSession();
        this.onUnauthenticated();
      }
      throw failure;
    }
    const as = options.as ?? "json";
    if (as === "none") return undefined as T;
    if (as === "text") return (await response.text()) as T;
    if (as === "blob") return (await response.blob()) as T;
    return (await response.json()) as T;
  }

  private async toFailure(response: Response): Promise<ApiFailure> {
    try {
      const doc = await response.json();
      return new ApiFailure(response.status, doc.error, doc.detail);
    } catch {
      return new ApiFailure(response.status, "HttpError",
                            `unexpected response ${response.status}`);
    }
  }

  private clearSession(): void {
    this.storage.removeItem(TOKEN_KEY);
    this.storage.removeItem(IDENTITY_KEY);
  }

  // ------------------------------------------------------------------ auth

  async login(username: string, password: string): Promise<LoginResponse> {
    const doc = await this.request<LoginResponse>("POST", "/api/auth/login", {
      json: { username, password },
    });
    this.storage.setItem(TOKEN_KEY, doc.token);
    this.storage.setItem(IDENTITY_KEY, JSON.stringify({
      username: doc.username, is_admin: doc.is_admin,
    }));
    return doc;
  }

  async logout(): Promise<void> {
    try {
      await this.request("POST", "/api/auth/logout", { as: "none" });
    } finally {
      this.clearSession();
    }
  }

  whoami(): Promise<User> {
    return this.request("GET", "/api/users/me");
  }

  // --------------------------------------------------------------- cluster

  clusterSummary(): Promise<ClusterSummary> {
    return this.request("GET", "/api/cluster/summary");
  }

  listNodes(): Promise<NodeInfo[]> {
    return this.request("GET", "/api/cluster/nodes");
  }

  addNode(name: string, cores: number, memory: number): Promise<NodeInfo> {
    return this.request("POST", "/api/cluster/nodes",
                        { json: { name, cores, memory } });
  }

  setNodeState(name: string, state: "online" | "offline"): Promise<NodeInfo> {
    return this.request("PUT", `/api/cluster/nodes/${encodeURIComponent(name)}`,
                        { json: { state } });
  }

  removeNode(name: string): Promise<void> {
    return this.request("DELETE",
                        `/api/cluster/nodes/${encodeURIComponent(name)}`,
                        { as: "none" });
  }

  listQueues(): Promise<QueueInfo[]> {
    return this.request("GET", "/api/cluster/queues");
  }

  addQueue(queue: Partial<QueueInfo> & { name: string }): Promise<QueueInfo> {
    return this.request("POST", "/api/cluster/queues", { json: queue });
  }

  updateQueue(name: string, changes: Partial<QueueInfo>): Promise<QueueInfo> {
    return this.request("PUT",
                        `/api/cluster/queues/${encodeURIComponent(name)}`,
                        { json: changes });
  }

  removeQueue(name: string): Promise<void> {
    return this.request("DELETE",
                        `/api/cluster/queues/${encodeURIComponent(name)}`,
                        { as: "none" });
  }

  getSettings(): Promise<ServerSettings> {
    return this.request("GET", "/api/cluster/settings");
  }

  updateSettings(changes: Partial<ServerSettings>): Promise<ServerSettings> {
    return this.request("PUT", "/api/cluster/settings", { json: changes });
  }

  // ------------------------------------------------------------- workflows

  listWorkflows(): Promise<Workflow[]> {
    return this.request("GET", "/api/workflows");
  }

  getWorkflow(id: string): Promise<Workflow> {
    return this.request("GET", `/api/workflows/${encodeURIComponent(id)}`);
  }

  createWorkflow(definition: Workflow): Promise<Workflow> {
    return this.request("POST", "/api/workflows", { json: definition });
  }

  updateWorkflow(id: string, definition: Workflow): Promise<Workflow> {
    return this.request("PUT", `/api/workflows/${encodeURIComponent(id)}`,
                        { json: definition });
  }

  deleteWorkflow(id: string): Promise<void> {
    return this.request("DELETE", `/api/workflows/${encodeURIComponent(id)}`,
                        { as: "none" });
  }

  shareWorkflow(
    id: string,
    target: { user?: string; group?: string },
    level: ShareLevel,
  ): Promise<unknown> {
    return this.request("POST",
                        `/api/workflows/${encodeURIComponent(id)}/share`,
                        { json: { ...target, level } });
  }

  exportWorkflow(id: string): Promise<Blob> {
    return this.request("GET",
                        `/api/workflows/${encodeURIComponent(id)}/export`,
                        { as: "blob" });
  }

  importWorkflow(archive: Blob, filename = "workflow.zip"): Promise<Workflow> {
    const form = new FormData();
    form.append("file", archive, filename);
    return this.request("POST", "/api/workflows/import", { body: form });
  }

  listScripts(workflowId: string): Promise<string[]> {
    return this.request(
      "GET", `/api/workflows/${encodeURIComponent(workflowId)}/scripts`);
  }

  getScript(workflowId: string, name: string): Promise<string> {
    return this.request(
      "GET",
      `/api/workflows/${encodeURIComponent(workflowId)}/scripts/` +
        encodeURIComponent(name),
      { as: "text" });
  }

  putScript(workflowId: string, name: string, text: string): Promise<void> {
    return this.request(
      "PUT",
      `/api/workflows/${encodeURIComponent(workflowId)}/scripts/` +
        encodeURIComponent(name),
      { body: text, headers: { "Content-Type": "text/plain" }, as: "none" });
  }

  listProfiles(workflowId: string): Promise<Profile[]> {
    return this.request(
      "GET", `/api/workflows/${encodeURIComponent(workflowId)}/profiles`);
  }

  getProfile(workflowId: string, profileId: string): Promise<Profile> {
    return this.request(
      "GET",
      `/api/workflows/${encodeURIComponent(workflowId)}/profiles/` +
        encodeURIComponent(profileId));
  }

  createProfile(
    workflowId: string,
    name: string,
    values: Record<string, unknown>,
  ): Promise<Profile> {
    return this.request(
      "POST", `/api/workflows/${encodeURIComponent(workflowId)}/profiles`,
      { json: { name, values } });
  }

  updateProfile(
    workflowId: string,
    profileId: string,
    name: string,
    values: Record<string, unknown>,
  ): Promise<Profile> {
    return this.request(
      "PUT",
      `/api/workflows/${encodeURIComponent(workflowId)}/profiles/` +
        encodeURIComponent(profileId),
      { json: { name, values } });
  }

  deleteProfile(workflowId: string, profileId: string): Promise<void> {
    return this.request(
      "DELETE",
      `/api/workflows/${encodeURIComponent(workflowId)}/profiles/` +
        encodeURIComponent(profileId),
      { as: "none" });
  }

  // ------------------------------------------------------------------ jobs

  listJobs(): Promise<JobSummary[]> {
    return this.request("GET", "/api/jobs");
  }

  getJob(id: string): Promise<JobDocument> {
    return this.request("GET", `/api/jobs/${encodeURIComponent(id)}`);
  }

  submitJob(
    workflowId: string,
    inputs: Record<string, unknown>,
    profileId?: string,
  ): Promise<JobDocument> {
    const body: Record<string, unknown> = {
      workflow_id: workflowId, inputs,
    };
    if (profileId !== undefined) body.profile_id = profileId;
    return this.request("POST", "/api/jobs", { json: body });
  }

  submitBatch(workflowId: string, batchFile: Blob): Promise<JobDocument[]> {
    const form = new FormData();
    form.append("workflow_id", workflowId);
    form.append("file", batchFile, "batch.txt");
    return this.request("POST", "/api/jobs/batch", { body: form });
  }

  cancelJob(id: string): Promise<JobDocument> {
    return this.request("POST",
                        `/api/jobs/${encodeURIComponent(id)}/cancel`, {});
  }

  holdJob(id: string): Promise<JobDocument> {
    return this.request("POST", `/api/jobs/${encodeURIComponent(id)}/hold`,
                        {});
  }

  releaseJob(id: string): Promise<JobDocument> {
    return this.request("POST",
                        `/api/jobs/${encodeURIComponent(id)}/release`, {});
  }

  repeatJob(id: string, fromStage?: string): Promise<JobDocument> {
    return this.request("POST",
                        `/api/jobs/${encodeURIComponent(id)}/repeat`,
                        { json: fromStage ? { from_stage: fromStage } : {} });
  }

  deleteJob(id: string): Promise<void> {
    return this.request("DELETE", `/api/jobs/${encodeURIComponent(id)}`,
                        { as: "none" });
  }

  shareJob(
    id: string,
    target: { user?: string; group?: string },
    level: ShareLevel,
  ): Promise<unknown> {
    return this.request("POST", `/api/jobs/${encodeURIComponent(id)}/share`,
                        { json: { ...target, level } });
  }

  jobFile(id: string, path: string): Promise<string> {
    const encoded = path.split("/").map(encodeURIComponent).join("/");
    return this.request("GET",
                        `/api/jobs/${encodeURIComponent(id)}/files/${encoded}`,
                        { as: "text" });
  }

  requestAlteration(
    jobId: string,
    changes: Record<string, unknown>,
  ): Promise<Alteration> {
    return this.request("POST",
                        `/api/jobs/${encodeURIComponent(jobId)}/alterations`,
                        { json: { changes } });
  }

  listAlterations(): Promise<Alteration[]> {
    return this.request("GET", "/api/alterations");
  }

  decideAlteration(id: string, approve: boolean): Promise<Alteration> {
    return this.request("POST",
                        `/api/alterations/${encodeURIComponent(id)}/decide`,
                        { json: { approve } });
  }

  // -------------------------------------------------------- administration

  listUsers(): Promise<User[]> {
    return this.request("GET", "/api/users");
  }

  createUser(username: string, password: string,
             isAdmin = false): Promise<User> {
    return this.request("POST", "/api/users",
                        { json: { username, password, is_admin: isAdmin } });
  }

  updateUser(
    username: string,
    changes: { password?: string; is_admin?: boolean; disabled?: boolean },
  ): Promise<User> {
    return this.request("PUT", `/api/users/${encodeURIComponent(username)}`,
                        { json: changes });
  }

  listGroups(): Promise<Group[]> {
    return this.request("GET", "/api/groups");
  }

  createGroup(name: string): Promise<Group> {
    return this.request("POST", "/api/groups", { json: { name } });
  }

  setGroupMember(name: string, username: string,
                 member: boolean): Promise<Group> {
    return this.request("PUT",
                        `/api/groups/${encodeURIComponent(name)}/members`,
                        { json: { username, member } });
  }

  deleteGroup(name: string): Promise<void> {
    return this.request("DELETE", `/api/groups/${encodeURIComponent(name)}`,
                        { as: "none" });
  }
}
