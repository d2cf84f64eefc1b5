/** Payload shapes exchanged with the server; one interface per schema
 *  document under docs/api/. */

export interface ApiError {
  error: string;
  detail: string;
}

export interface LoginResponse {
  token: string;
  expires_in: number;
  username: string;
  is_admin: boolean;
}

export interface User {
  username: string;
  is_admin: boolean;
  disabled: boolean;
  groups: string[];
}

export interface NodeInfo {
  name: string;
  state: "online" | "offline";
  cores_total: number;
  cores_used: number;
  memory_total: number;
  memory_used: number;
}

export interface QueueInfo {
  name: string;
  enabled: boolean;
  max_walltime: number | null;
  max_queued: number | null;
}

export type ClusterJobState =
  | "Queued" | "Held" | "Running" | "Suspended" | "Exited" | "Killed";

export interface ClusterJob {
  id: string;
  name: string;
  owner: string;
  state: ClusterJobState;
  queue: string;
  node: string | null;
  cores: number;
  memory: number;
  walltime: number;
}

export interface ClusterSummary {
  nodes_online: number;
  nodes_offline: number;
  utilization: number;
  jobs_running: number;
  jobs_queued: number;
  disk_available_bytes: number;
  nodes: NodeInfo[];
  queue: ClusterJob[];
}

export interface ServerSettings {
  server_name: string;
  tick_interval: number;
  default_queue: string;
  grace_seconds: number;
}

export type ParamKind = "text" | "number" | "flag" | "input-file";

export interface Parameter {
  name: string;
  kind: ParamKind;
  required: boolean;
  default: unknown;
}

export type ConditionKind = "success" | "failure" | "exit-codes" | "always";

export interface Condition {
  kind: ConditionKind;
  exit_codes?: number[];
}

export interface Dependency {
  upstream: string;
  condition: Condition;
}

export interface ResourceRequest {
  cores: number;
  memory: number;
  walltime: number;
  queue: string;
}

export interface Stage {
  name: string;
  command_template: string;
  parameters: Parameter[];
  expected_outputs: string[];
  resources: ResourceRequest;
  dependencies: Dependency[];
  scripts: string[];
}

export interface Workflow {
  id?: string;
  owner?: string;
  created?: string;
  modified?: string;
  name: string;
  description: string;
  stages: Stage[];
}

export interface Profile {
  id: string;
  workflow_id: string;
  name: string;
  values: Record<string, unknown>;
}

export type StageRunState =
  | "pending" | "ready" | "submitted" | "running" | "held" | "suspended"
  | "succeeded" | "failed" | "skipped" | "killed";

export interface StageRun {
  stage: string;
  state: StageRunState;
  cluster_job_id: string | null;
  exit_code: number | null;
  reason: string | null;
  snapshot_id: string | null;
  stdout_file: string | null;
  stderr_file: string | null;
  used: Record<string, number>;
  samples: unknown[];
  started_at: number | null;
  ended_at: number | null;
  restored: boolean;
}

export type JobVerdict = "running" | "completed" | "failed";

export interface JobSummary {
  id: string;
  workflow_name: string;
  owner: string;
  verdict: JobVerdict;
  verdict_reason: string | null;
  submitted_at: number;
  ended_at: number | null;
  held: boolean;
  stage_states: Record<string, StageRunState>;
}

export interface JobDocument {
  id: string;
  workflow: Workflow;
  owner: string;
  inputs: Record<string, unknown>;
  working_dir: string;
  verdict: JobVerdict;
  verdict_reason: string | null;
  submitted_at: number;
  ended_at: number | null;
  held: boolean;
  resource_overrides: Record<string, Record<string, number>>;
  stage_runs: Record<string, StageRun>;
}

export interface Alteration {
  id: string;
  job_id: string;
  requester: string;
  changes: Record<string, unknown>;
  state: "pending" | "approved" | "denied";
  decided_by: string | null;
}

export interface Group {
  name: string;
  owner: string;
  members: string[];
}

export type ShareLevel = "view" | "run" | "edit";
