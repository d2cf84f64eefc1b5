import { ApiClient, ApiFailure } from "./api.js";
import { h, mount } from "./dom.js";
import { formatBytes, formatDuration, formatPercent,
         formatTimestamp } from "./format.js";
import type { ClusterSummary, JobSummary } from "./types.js";

export const DEFAULT_POLL_MS = 5_000;
export const MAX_POLL_MS = 60_000;

export interface DashboardData {
  summary: ClusterSummary;
  jobs: JobSummary[];
}

export interface DashboardActions {
  onCancel(jobId: string): void;
  onHold(jobId: string): void;
  onRelease(jobId: string): void;
  onOpenJob(jobId: string): void;
}

function gauge(utilization: number): HTMLElement {
  const percent = formatPercent(utilization);
  return h("div", { class: "gauge", dataset: { utilization: String(utilization) } },
    h("div", {
      class: "gauge-fill",
      style: `width: ${Math.min(100, Math.max(0, utilization * 100))}%`,
    }),
    h("span", { class: "gauge-label" }, `${percent} of cores in use`),
  );
}

function nodeCard(node: DashboardData["summary"]["nodes"][number]): HTMLElement {
  return h("div", { class: `node-card node-${node.state}`, dataset: { node: node.name } },
    h("h3", null,
      node.name,
      h("span", { class: `badge badge-${node.state}` }, node.state),
    ),
    h("p", null, `${node.cores_used}/${node.cores_total} cores`),
    h("p", null,
      `${formatBytes(node.memory_used)} / ${formatBytes(node.memory_total)}`),
  );
}

function queueTable(summary: ClusterSummary): HTMLElement {
  const header = h("tr", null,
    ...["ID", "Name", "Owner", "State", "Node", "Cores", "Memory", "Walltime"]
      .map((t) => h("th", null, t)));
  const rows = summary.queue.map((job) =>
    h("tr", { dataset: { clusterJob: job.id } },
      h("td", null, job.id),
      h("td", null, job.name),
      h("td", null, job.owner),
      h("td", { class: `state-${job.state.toLowerCase()}` }, job.state),
      h("td", null, job.node ?? "—"),
      h("td", null, String(job.cores)),
      h("td", null, formatBytes(job.memory)),
      h("td", null, formatDuration(job.walltime)),
    ));
  return h("table", { class: "queue-table" },
    h("thead", null, header),
    h("tbody", null,
      rows.length ? rows
        : h("tr", null, h("td", { colspan: "8", class: "empty" },
                          "cluster queue is empty"))),
  );
}

function jobRow(job: JobSummary, actions: DashboardActions): HTMLElement {
  const finished = job.verdict !== "running";
  const buttons: HTMLElement[] = [];
  if (!finished) {
    buttons.push(actionButton("cancel", job.id, actions.onCancel));
    buttons.push(job.held
      ? actionButton("release", job.id, actions.onRelease)
      : actionButton("hold", job.id, actions.onHold));
  }
  return h("tr", { dataset: { job: job.id } },
    h("td", null,
      h("a", {
        href: `#/jobs/${job.id}`,
        onclick: (event: Event) => {
          event.preventDefault();
          actions.onOpenJob(job.id);
        },
      }, job.id)),
    h("td", null, job.workflow_name),
    h("td", null, job.owner),
    h("td", { class: `verdict-${job.verdict}` },
      job.verdict + (job.held ? " (held)" : "")),
    h("td", null, formatTimestamp(job.submitted_at)),
    h("td", { class: "actions" }, ...buttons),
  );
}

function actionButton(
  label: "cancel" | "hold" | "release",
  jobId: string,
  handler: (jobId: string) => void,
): HTMLElement {
  return h("button", {
    class: `action-${label}`,
    dataset: { action: label, job: jobId },
    onclick: (event: Event) => {
      // One API call per press: the button goes dead until the next render.
      const button = event.currentTarget as HTMLButtonElement;
      if (button.disabled) return;
      button.disabled = true;
      handler(jobId);
    },
  }, label);
}

function jobsTable(jobs: JobSummary[], actions: DashboardActions): HTMLElement {
  const header = h("tr", null,
    ...["Job", "Workflow", "Owner", "Verdict", "Submitted", ""]
      .map((t) => h("th", null, t)));
  const rows = jobs.map((job) => jobRow(job, actions));
  return h("table", { class: "jobs-table" },
    h("thead", null, header),
    h("tbody", null,
      rows.length ? rows
        : h("tr", null, h("td", { colspan: "6", class: "empty" },
                          "no jobs yet"))),
  );
}

/** Pure projection of one poll's data; safe to call repeatedly. */
export function renderDashboard(
  data: DashboardData,
  actions: DashboardActions,
): HTMLElement {
  const s = data.summary;
  return h("section", { class: "dashboard" },
    h("h2", null, "Dashboard"),
    h("div", { class: "stats" },
      stat("nodes-online", "nodes online", String(s.nodes_online)),
      stat("nodes-offline", "nodes offline", String(s.nodes_offline)),
      stat("jobs-running", "running", String(s.jobs_running)),
      stat("jobs-queued", "queued", String(s.jobs_queued)),
      stat("disk-free", "disk free", formatBytes(s.disk_available_bytes)),
    ),
    gauge(s.utilization),
    h("div", { class: "node-cards" }, ...s.nodes.map(nodeCard)),
    h("h3", null, "Cluster queue"),
    queueTable(s),
    h("h3", null, "My jobs"),
    jobsTable(data.jobs, actions),
  );
}

function stat(slug: string, label: string, value: string): HTMLElement {
  return h("div", { class: "stat", dataset: { stat: slug } },
    h("strong", null, value), " ", label);
}

export interface DashboardOptions {
  pollMs?: number;
  maxPollMs?: number;
  onOpenJob?: (jobId: string) => void;
}

/** Dashboard controller: one in-flight poll at a time, exponential backoff
 *  while the server is unreachable, failures surfaced as a banner. */
export class DashboardPage {
  private readonly basePollMs: number;
  private readonly maxPollMs: number;
  private currentPollMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = true;
  private banner: HTMLElement;
  private body: HTMLElement;
  private readonly openJob: (jobId: string) => void;

  constructor(
    private readonly client: ApiClient,
    private readonly root: Element,
    options: DashboardOptions = {},
  ) {
    this.basePollMs = options.pollMs ?? DEFAULT_POLL_MS;
    this.maxPollMs = options.maxPollMs ?? MAX_POLL_MS;
    this.currentPollMs = this.basePollMs;
    this.openJob = options.onOpenJob ?? (() => undefined);
    this.banner = h("div", { class: "banner", hidden: true });
    this.body = h("div", { class: "dashboard-body" }, "loading…");
    mount(this.root as Element, this.banner, this.body);
  }

  async start(): Promise<void> {
    this.stopped = false;
    await this.poll();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }

  /** Current backoff interval, exposed for inspection. */
  get pollInterval(): number {
    return this.currentPollMs;
  }

  private async poll(): Promise<void> {
    try {
      const [summary, jobs] = await Promise.all([
        this.client.clusterSummary(),
        this.client.listJobs(),
      ]);
      this.showData({ summary, jobs });
      this.currentPollMs = this.basePollMs;
      this.hideBanner();
    } catch (failure) {
      if (failure instanceof ApiFailure && failure.status === 401) {
        this.stop();
        return;
      }
      this.showBanner(failure instanceof Error
        ? failure.message : String(failure));
      this.currentPollMs = Math.min(this.currentPollMs * 2, this.maxPollMs);
    }
    this.schedule();
  }

  private schedule(): void {
    if (this.stopped) return;
    this.timer = setTimeout(() => {
      void this.poll();
    }, this.currentPollMs);
  }

  private showData(data: DashboardData): void {
    const rendered = renderDashboard(data, {
      onCancel: (id) => this.act(() => this.client.cancelJob(id)),
      onHold: (id) => this.act(() => this.client.holdJob(id)),
      onRelease: (id) => this.act(() => this.client.releaseJob(id)),
      onOpenJob: this.openJob,
    });
    this.body.replaceChildren(rendered);
  }

  private act(call: () => Promise<unknown>): void {
    void call()
      .then(() => this.refreshNow())
      .catch((failure: unknown) => {
        if (failure instanceof ApiFailure && failure.status === 401) return;
        this.showBanner(failure instanceof Error
          ? failure.message : String(failure));
      });
  }

  /** Re-poll immediately (after an action), collapsing the pending timer. */
  async refreshNow(): Promise<void> {
    if (this.stopped) return;
    if (this.timer !== null) clearTimeout(this.timer);
    await this.poll();
  }

  private showBanner(message: string): void {
    this.banner.textContent = `cluster unreachable: ${message}`;
    this.banner.hidden = false;
  }

  private hideBanner(): void {
    this.banner.hidden = true;
    this.banner.textContent = "";
  }
}
