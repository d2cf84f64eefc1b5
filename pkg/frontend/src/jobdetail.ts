import { ApiClient } from "./api.js";
import { h, mount } from "./dom.js";
import { formatTimestamp } from "./format.js";
import type { JobDocument, StageRun } from "./types.js";

export interface JobDetailCallbacks {
  onGone(): void;
}

/** Single-job page: verdict, stage timeline in definition order, per-stage
 *  log viewers, and the job-level actions. */
export class JobDetailPage {
  private job: JobDocument | null = null;
  private logs = new Map<string, string>();
  private notice = "";

  constructor(
    private readonly client: ApiClient,
    private readonly root: Element,
    private readonly jobId: string,
    private readonly callbacks: JobDetailCallbacks,
  ) {}

  async load(): Promise<void> {
    this.job = await this.client.getJob(this.jobId);
    this.render();
  }

  private async act(call: () => Promise<unknown>,
                    reload = true): Promise<void> {
    try {
      await call();
      this.notice = "";
      if (reload) await this.load();
      else this.callbacks.onGone();
    } catch (failure) {
      this.notice = failure instanceof Error
        ? failure.message : String(failure);
      this.render();
    }
  }

  private async showLog(run: StageRun, which: "stdout" | "stderr"):
      Promise<void> {
    const file = which === "stdout" ? run.stdout_file : run.stderr_file;
    if (!file) return;
    try {
      const text = await this.client.jobFile(this.jobId, file);
      this.logs.set(`${run.stage}:${which}`, text || "(empty)");
    } catch (failure) {
      this.logs.set(`${run.stage}:${which}`,
                    failure instanceof Error
                      ? failure.message : String(failure));
    }
    this.render();
  }

  render(): void {
    const job = this.job;
    if (!job) {
      mount(this.root, h("p", null, "loading…"));
      return;
    }
    const runs = job.workflow.stages
      .map((stage) => job.stage_runs[stage.name])
      .filter((run): run is StageRun => run !== undefined);
    mount(this.root,
      h("section", { class: "job-detail" },
        h("h2", null, `Job ${job.id} — ${job.workflow.name}`),
        this.notice ? h("p", { class: "banner" }, this.notice) : null,
        h("p", { class: `verdict verdict-${job.verdict}` },
          `${job.verdict}${job.held ? " (held)" : ""}` +
          (job.verdict_reason ? ` — ${job.verdict_reason}` : "")),
        h("p", null, `submitted ${formatTimestamp(job.submitted_at)}`,
          job.ended_at ? `, ended ${formatTimestamp(job.ended_at)}` : ""),
        h("div", { class: "job-actions" }, ...this.actionButtons(job)),
        h("h3", null, "Stages"),
        h("ol", { class: "stage-timeline" },
          ...runs.map((run) => this.stageItem(run))),
        this.alterationForm(),
      ),
    );
  }

  private actionButtons(job: JobDocument): HTMLElement[] {
    const buttons: HTMLElement[] = [];
    if (job.verdict === "running") {
      buttons.push(h("button", {
        class: "action-cancel",
        onclick: () => void this.act(() => this.client.cancelJob(job.id)),
      }, "cancel"));
      buttons.push(job.held
        ? h("button", {
            class: "action-release",
            onclick: () => void this.act(() => this.client.releaseJob(job.id)),
          }, "release")
        : h("button", {
            class: "action-hold",
            onclick: () => void this.act(() => this.client.holdJob(job.id)),
          }, "hold"));
    } else {
      buttons.push(h("button", {
        class: "action-repeat",
        onclick: () => void this.act(() => this.client.repeatJob(job.id)),
      }, "repeat"));
      buttons.push(h("button", {
        class: "action-delete",
        onclick: () => void this.act(() => this.client.deleteJob(job.id),
                                     false),
      }, "delete"));
    }
    return buttons;
  }

  private stageItem(run: StageRun): HTMLElement {
    const children: HTMLElement[] = [];
    for (const which of ["stdout", "stderr"] as const) {
      const file = which === "stdout" ? run.stdout_file : run.stderr_file;
      if (!file) continue;
      const key = `${run.stage}:${which}`;
      children.push(h("button", {
        class: `show-${which}`, dataset: { stage: run.stage, log: which },
        onclick: () => void this.showLog(run, which),
      }, which));
      const text = this.logs.get(key);
      if (text !== undefined) {
        children.push(h("pre", { class: `log-${which}` }, text));
      }
    }
    return h("li",
      { class: `stage-item state-${run.state}`,
        dataset: { stage: run.stage } },
      h("strong", null, run.stage),
      h("span", { class: "stage-state" }, ` ${run.state}`),
      run.exit_code !== null
        ? h("span", { class: "exit-code" }, ` exit ${run.exit_code}`) : null,
      run.reason ? h("span", { class: "reason" }, ` (${run.reason})`) : null,
      run.restored ? h("span", { class: "restored" }, " restored") : null,
      run.started_at
        ? h("span", { class: "times" },
            ` ${formatTimestamp(run.started_at)}` +
            (run.ended_at ? ` → ${formatTimestamp(run.ended_at)}` : ""))
        : null,
      ...children,
    );
  }

  private alterationForm(): HTMLElement {
    const field = h("select", null,
      h("option", { value: "walltime" }, "walltime"),
      h("option", { value: "cores" }, "cores"),
      h("option", { value: "memory" }, "memory"),
    ) as HTMLSelectElement;
    const value = h("input", { type: "number", min: "1" }) as HTMLInputElement;
    const status = h("span", { class: "alteration-status" });
    return h("details", { class: "alteration-form" },
      h("summary", null, "Request resource alteration"),
      field, value,
      h("button", {
        class: "request-alteration",
        onclick: async () => {
          try {
            const alteration = await this.client.requestAlteration(
              this.jobId, { [field.value]: Number(value.value) });
            status.textContent = `request ${alteration.id} is ${alteration.state}`;
          } catch (failure) {
            status.textContent = failure instanceof Error
              ? failure.message : String(failure);
          }
        },
      }, "Request"),
      status,
    );
  }
}
