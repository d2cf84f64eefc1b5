import { ApiClient, FetchLike } from "../src/api";
import type {
  ClusterSummary, JobDocument, JobSummary, Profile, StageRun, Workflow,
} from "../src/types";

export interface Recorded {
  method: string;
  path: string;
  headers: Record<string, string>;
  json?: unknown;
  form?: FormData;
  text?: string;
}

interface CannedResponse {
  status?: number;
  json?: unknown;
  text?: string;
  blob?: Blob;
}

type Responder = CannedResponse | ((call: Recorded) => CannedResponse);

/** Records every request the client makes and answers from a route table,
 *  newest registration first so tests can override per-case. */
export class FakeApi {
  calls: Recorded[] = [];
  private routes: Array<{
    method: string;
    pattern: RegExp;
    respond: Responder;
  }> = [];

  on(method: string, pattern: RegExp | string, respond: Responder): this {
    const regex = typeof pattern === "string"
      ? new RegExp(`^${pattern.replace(/[.*+?^${}()|[\]\\]/g, "\\$&")}$`)
      : pattern;
    this.routes.unshift({ method: method.toUpperCase(), pattern: regex, respond });
    return this;
  }

  callsTo(method: string, pattern: RegExp | string): Recorded[] {
    const regex = typeof pattern === "string"
      ? new RegExp(`^${pattern.replace(/[.*+?^${}()|[\]\\]/g, "\\$&")}$`)
      : pattern;
    return this.calls.filter(
      (c) => c.method === method.toUpperCase() && regex.test(c.path));
  }

  fetch: FetchLike = async (url, init) => {
    const method = (init?.method ?? "GET").toUpperCase();
    const headers = Object.fromEntries(
      Object.entries((init?.headers as Record<string, string>) ?? {}));
    const call: Recorded = { method, path: url, headers };
    const body = init?.body;
    if (typeof body === "string") {
      call.text = body;
      if (headers["Content-Type"] === "application/json") {
        call.json = JSON.parse(body);
      }
    } else if (body instanceof FormData) {
      call.form = body;
    }
    this.calls.push(call);

    for (const route of this.routes) {
      if (route.method === method && route.pattern.test(url)) {
        const canned = typeof route.respond === "function"
          ? route.respond(call) : route.respond;
        return makeResponse(canned);
      }
    }
    return makeResponse({
      status: 404,
      json: { error: "UnknownRoute", detail: `no fake for ${method} ${url}` },
    });
  };
}

function makeResponse(canned: CannedResponse): Response {
  const status = canned.status ?? 200;
  if (canned.blob !== undefined) {
    return new Response(canned.blob, { status });
  }
  if (canned.text !== undefined) {
    return new Response(canned.text, { status });
  }
  return new Response(JSON.stringify(canned.json ?? {}), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export class MemoryStorage {
  private map = new Map<string, string>();
  getItem(key: string): string | null { return this.map.get(key) ?? null; }
  setItem(key: string, value: string): void { this.map.set(key, value); }
  removeItem(key: string): void { this.map.delete(key); }
}

export function makeClient(
  fake: FakeApi,
  options: { token?: string; admin?: boolean } = {},
): ApiClient {
  const storage = new MemoryStorage();
  if (options.token !== undefined) {
    storage.setItem("stagework.token", options.token);
    storage.setItem("stagework.identity", JSON.stringify({
      username: "alice", is_admin: options.admin ?? false,
    }));
  }
  return new ApiClient({ fetchFn: fake.fetch, storage });
}

// ------------------------------------------------------------------ fixtures

export function summaryFixture(): ClusterSummary {
  return {
    nodes_online: 2,
    nodes_offline: 1,
    utilization: 0.25,
    jobs_running: 1,
    jobs_queued: 1,
    disk_available_bytes: 42 * 1024 ** 3,
    nodes: [
      { name: "node1", state: "online", cores_total: 4, cores_used: 2,
        memory_total: 8 * 1024 ** 3, memory_used: 2 * 1024 ** 3 },
      { name: "node2", state: "online", cores_total: 4, cores_used: 0,
        memory_total: 8 * 1024 ** 3, memory_used: 0 },
      { name: "node3", state: "offline", cores_total: 8, cores_used: 0,
        memory_total: 16 * 1024 ** 3, memory_used: 0 },
    ],
    queue: [
      { id: "11", name: "docking.dock", owner: "alice", state: "Running",
        queue: "batch", node: "node1", cores: 2, memory: 1024 ** 3,
        walltime: 3600 },
      { id: "12", name: "docking.dock", owner: "bob", state: "Queued",
        queue: "batch", node: null, cores: 2, memory: 1024 ** 3,
        walltime: 3600 },
    ],
  };
}

export function jobsFixture(): JobSummary[] {
  return [
    { id: "7", workflow_name: "docking", owner: "alice", verdict: "running",
      verdict_reason: null, submitted_at: 1781517600,
      ended_at: null, held: false,
      stage_states: { grid: "succeeded", dock: "running" } },
    { id: "6", workflow_name: "docking", owner: "alice", verdict: "completed",
      verdict_reason: null, submitted_at: 1781514000,
      ended_at: 1781514300, held: false,
      stage_states: { grid: "succeeded", dock: "succeeded" } },
  ];
}

/** Workflow with one parameter of each interactive kind. */
export function formWorkflowFixture(): Workflow {
  return {
    id: "wf1",
    owner: "alice",
    created: "2026-08-15T08:00:00+00:00",
    modified: "2026-08-15T08:00:00+00:00",
    name: "echo-suite",
    description: "exercises every control kind",
    stages: [
      {
        name: "speak",
        command_template: "echo ${message} ${count} ${loud}",
        parameters: [
          { name: "message", kind: "text", required: true, default: null },
          { name: "count", kind: "number", required: false, default: 1 },
          { name: "loud", kind: "flag", required: false, default: false },
        ],
        expected_outputs: [],
        resources: { cores: 1, memory: 1024 ** 3, walltime: 600, queue: "" },
        dependencies: [],
        scripts: [],
      },
    ],
  };
}

export function profileFixture(): Profile {
  return {
    id: "p1",
    workflow_id: "wf1",
    name: "defaults-for-alice",
    values: { message: "hello", count: 3, loud: true },
  };
}

function runFixture(stage: string, overrides: Partial<StageRun>): StageRun {
  return {
    stage,
    state: "succeeded",
    cluster_job_id: "31",
    exit_code: 0,
    reason: null,
    snapshot_id: null,
    stdout_file: `1.stagework.OU`,
    stderr_file: `1.stagework.ER`,
    used: { cores: 1 },
    samples: [],
    started_at: 1781517610,
    ended_at: 1781517720,
    restored: false,
    ...overrides,
  };
}

/** Two-stage job mid-flight: first stage done, second running. */
export function jobDocumentFixture(): JobDocument {
  const workflow = formWorkflowFixture();
  workflow.name = "docking";
  workflow.stages = [
    { ...workflow.stages[0], name: "grid", parameters: [] },
    { ...workflow.stages[0], name: "dock", parameters: [],
      dependencies: [{ upstream: "grid", condition: { kind: "success" } }] },
  ];
  return {
    id: "7",
    workflow,
    owner: "alice",
    inputs: {},
    working_dir: "/srv/jobs/7",
    verdict: "running",
    verdict_reason: null,
    submitted_at: 1781517600,
    ended_at: null,
    held: false,
    resource_overrides: {},
    stage_runs: {
      grid: runFixture("grid", {}),
      dock: runFixture("dock", {
        state: "running", exit_code: null, ended_at: null,
        stdout_file: "2.stagework.OU", stderr_file: "2.stagework.ER",
        cluster_job_id: "32",
      }),
    },
  };
}
