import { ApiClient } from "./api.js";
import { h, mount } from "./dom.js";
import type { Workflow } from "./types.js";

export interface WorkflowListCallbacks {
  onRun(id: string): void;
  onEdit(id: string): void;
  onNew(): void;
  onImported(workflow: Workflow): void;
}

/** Workflow catalogue: everything the caller may view, with run/edit/delete
 *  shortcuts plus archive import. */
export class WorkflowListPage {
  private workflows: Workflow[] = [];
  private notice = "";

  constructor(
    private readonly client: ApiClient,
    private readonly root: Element,
    private readonly callbacks: WorkflowListCallbacks,
  ) {}

  async load(): Promise<void> {
    this.workflows = await this.client.listWorkflows();
    this.render();
  }

  render(): void {
    const rows = this.workflows.map((workflow) =>
      h("tr", { dataset: { workflow: workflow.id ?? "" } },
        h("td", null, workflow.name),
        h("td", null, workflow.description),
        h("td", null, String(workflow.stages.length)),
        h("td", null, workflow.owner ?? ""),
        h("td", { class: "actions" },
          h("button", {
            class: "run",
            onclick: () => this.callbacks.onRun(workflow.id!),
          }, "run"),
          h("button", {
            class: "edit",
            onclick: () => this.callbacks.onEdit(workflow.id!),
          }, "edit"),
          h("button", {
            class: "delete",
            onclick: async () => {
              try {
                await this.client.deleteWorkflow(workflow.id!);
                await this.load();
              } catch (failure) {
                this.notice = failure instanceof Error
                  ? failure.message : String(failure);
                this.render();
              }
            },
          }, "delete"),
        ),
      ));

    const importInput = h("input", {
      type: "file", accept: ".zip", class: "import-file",
      onchange: async (event: Event) => {
        const input = event.currentTarget as HTMLInputElement;
        const file = input.files?.[0];
        if (!file) return;
        try {
          const imported = await this.client.importWorkflow(file, file.name);
          this.callbacks.onImported(imported);
        } catch (failure) {
          this.notice = failure instanceof Error
            ? failure.message : String(failure);
          this.render();
        }
      },
    }) as HTMLInputElement;

    mount(this.root,
      h("section", { class: "workflow-list" },
        h("h2", null, "Workflows"),
        this.notice ? h("p", { class: "banner" }, this.notice) : null,
        h("table", null,
          h("thead", null, h("tr", null,
            ...["Name", "Description", "Stages", "Owner", ""].map(
              (t) => h("th", null, t)))),
          h("tbody", null,
            rows.length ? rows
              : h("tr", null,
                  h("td", { colspan: "5", class: "empty" },
                    "no workflows yet")))),
        h("div", { class: "list-actions" },
          h("button", {
            class: "new-workflow",
            onclick: () => this.callbacks.onNew(),
          }, "New workflow"),
          h("label", { class: "import-label" }, "Import archive: ",
            importInput),
        ),
      ),
    );
  }
}
