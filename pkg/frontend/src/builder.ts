import { ApiClient, ApiFailure } from "./api.js";
import { h, mount } from "./dom.js";
import type {
  Condition, ConditionKind, Dependency, Parameter, ShareLevel, Stage,
  Workflow,
} from "./types.js";

const CONDITION_KINDS: ConditionKind[] = [
  "success", "failure", "exit-codes", "always",
];
const PARAM_KINDS: Parameter["kind"][] = [
  "text", "number", "flag", "input-file",
];

export function emptyStage(name: string): Stage {
  return {
    name,
    command_template: "",
    parameters: [],
    expected_outputs: [],
    resources: { cores: 1, memory: 1024 ** 3, walltime: 3600, queue: "" },
    dependencies: [],
    scripts: [],
  };
}

export function emptyWorkflow(): Workflow {
  return { name: "", description: "", stages: [] };
}

/** Stage names forming the first dependency cycle found, or [] when the
 *  graph is acyclic. Members come back in cycle order. */
export function findCycle(stages: Stage[]): string[] {
  const upstreams = new Map<string, string[]>(
    stages.map((s) => [s.name, s.dependencies.map((d) => d.upstream)]));
  const color = new Map<string, "grey" | "black">();
  const trail: string[] = [];

  const visit = (name: string): string[] => {
    color.set(name, "grey");
    trail.push(name);
    for (const upstream of upstreams.get(name) ?? []) {
      const seen = color.get(upstream);
      if (seen === "black" || !upstreams.has(upstream)) continue;
      if (seen === "grey") {
        return trail.slice(trail.indexOf(upstream));
      }
      const cycle = visit(upstream);
      if (cycle.length) return cycle;
    }
    trail.pop();
    color.set(name, "black");
    return [];
  };

  for (const stage of stages) {
    if (!color.has(stage.name)) {
      const cycle = visit(stage.name);
      if (cycle.length) return cycle;
    }
  }
  return [];
}

export function parseExitCodes(text: string): number[] {
  return text
    .split(/[,\s]+/)
    .filter((part) => part !== "")
    .map((part) => Number(part));
}

export function parseNameList(text: string): string[] {
  return text.split(/[,\n]+/).map((part) => part.trim())
    .filter((part) => part !== "");
}

/** Split the server's rejection detail into per-stage messages; entries the
 *  server did not anchor to a stage name land under "". */
export function mapViolations(
  detail: string,
  stageNames: string[],
): Map<string, string[]> {
  const result = new Map<string, string[]>();
  const text = detail.replace(/^invalid workflow:\s*/, "");
  for (const chunk of text.split("; ")) {
    const match = /^\[[-\w]+\] ([^:]+): /.exec(chunk);
    const where = match && stageNames.includes(match[1]) ? match[1] : "";
    const bucket = result.get(where) ?? [];
    bucket.push(chunk);
    result.set(where, bucket);
  }
  return result;
}

interface BuilderCallbacks {
  onSaved(workflow: Workflow): void;
}

/** Click-based workflow editor. All edits land in a local draft; Save PUTs
 *  (or POSTs) the whole definition and renders rejections inline. */
export class WorkflowBuilder {
  draft: Workflow;
  private violations = new Map<string, string[]>();
  private cycleMembers = new Set<string>();
  private notice = "";
  private scriptNames: string[] = [];
  private openScript: string | null = null;
  private scriptText = "";

  constructor(
    private readonly client: ApiClient,
    private readonly root: Element,
    workflow: Workflow,
    private readonly callbacks: BuilderCallbacks,
  ) {
    this.draft = structuredClone(workflow);
    this.render();
    if (this.draft.id) void this.loadScriptNames();
  }

  private async loadScriptNames(): Promise<void> {
    try {
      this.scriptNames = await this.client.listScripts(this.draft.id!);
      this.render();
    } catch {
      // Script listing is cosmetic here; the pane still allows new names.
    }
  }

  // ------------------------------------------------------------------ save

  async save(): Promise<void> {
    this.violations.clear();
    this.cycleMembers.clear();
    this.notice = "";

    const cycle = findCycle(this.draft.stages);
    if (cycle.length) {
      this.cycleMembers = new Set(cycle);
      this.notice = `dependency cycle: ${cycle.join(" → ")}`;
      this.render();
      return;
    }

    try {
      const saved = this.draft.id
        ? await this.client.updateWorkflow(this.draft.id, this.draft)
        : await this.client.createWorkflow(this.draft);
      this.draft = structuredClone(saved);
      this.notice = "saved";
      this.render();
      this.callbacks.onSaved(saved);
    } catch (failure) {
      if (failure instanceof ApiFailure && failure.status === 400) {
        this.violations = mapViolations(
          failure.detail, this.draft.stages.map((s) => s.name));
        this.notice = "the server rejected this workflow";
      } else {
        this.notice = failure instanceof Error
          ? failure.message : String(failure);
      }
      this.render();
    }
  }

  private async exportArchive(): Promise<void> {
    if (!this.draft.id) return;
    const blob = await this.client.exportWorkflow(this.draft.id);
    if (typeof URL.createObjectURL !== "function") return;
    const url = URL.createObjectURL(blob);
    const anchor = h("a", {
      href: url, download: `${this.draft.name || "workflow"}.zip`,
    });
    anchor.click();
    URL.revokeObjectURL(url);
  }

  // ---------------------------------------------------------------- render

  render(): void {
    const stageCards = this.draft.stages.map(
      (stage, index) => this.stageCard(stage, index));
    mount(this.root,
      h("section", { class: "builder" },
        h("h2", null,
          this.draft.id ? `Edit ${this.draft.name}` : "New workflow"),
        this.noticeLine(),
        ...this.generalViolations(),
        h("div", { class: "field" },
          h("label", null, "Name"),
          this.textInput(this.draft.name, (v) => { this.draft.name = v; })),
        h("div", { class: "field" },
          h("label", null, "Description"),
          this.textInput(this.draft.description,
                         (v) => { this.draft.description = v; })),
        h("div", { class: "stage-list" }, ...stageCards),
        h("div", { class: "builder-actions" },
          h("button", {
            class: "add-stage",
            onclick: () => {
              this.draft.stages.push(
                emptyStage(`stage-${this.draft.stages.length + 1}`));
              this.render();
            },
          }, "Add stage"),
          h("button", { class: "save", onclick: () => void this.save() },
            "Save"),
          this.draft.id
            ? h("button", {
                class: "export",
                onclick: () => void this.exportArchive(),
              }, "Export")
            : null,
        ),
        this.draft.id ? this.shareDialog() : null,
        this.draft.id ? this.scriptPane() : null,
      ),
    );
  }

  private noticeLine(): HTMLElement | null {
    if (!this.notice) return null;
    return h("p", { class: "builder-notice" }, this.notice);
  }

  private generalViolations(): HTMLElement[] {
    const general = this.violations.get("") ?? [];
    return general.map((message) =>
      h("p", { class: "violation" }, message));
  }

  private stageCard(stage: Stage, index: number): HTMLElement {
    const problems = this.violations.get(stage.name) ?? [];
    const classes = ["stage-card"];
    if (this.cycleMembers.has(stage.name)) classes.push("cycle-member");
    return h("div",
      { class: classes.join(" "), dataset: { stage: stage.name } },
      h("h3", null, `Stage ${index + 1}`),
      ...problems.map((message) => h("p", { class: "violation" }, message)),
      h("div", { class: "field" },
        h("label", null, "Name"),
        this.textInput(stage.name, (v) => this.renameStage(stage, v))),
      h("div", { class: "field" },
        h("label", null, "Command"),
        this.textArea(stage.command_template,
                      (v) => { stage.command_template = v; })),
      h("div", { class: "field" },
        h("label", null, "Expected outputs (comma separated)"),
        this.textInput(stage.expected_outputs.join(", "),
                       (v) => { stage.expected_outputs = parseNameList(v); })),
      h("div", { class: "field" },
        h("label", null, "Scripts (comma separated)"),
        this.textInput(stage.scripts.join(", "),
                       (v) => { stage.scripts = parseNameList(v); })),
      this.resourcesRow(stage),
      this.parametersBlock(stage),
      this.dependenciesBlock(stage),
      h("button", {
        class: "remove-stage",
        onclick: () => {
          this.draft.stages.splice(index, 1);
          this.render();
        },
      }, "Remove stage"),
    );
  }

  private renameStage(stage: Stage, newName: string): void {
    const oldName = stage.name;
    stage.name = newName;
    for (const other of this.draft.stages) {
      for (const dep of other.dependencies) {
        if (dep.upstream === oldName) dep.upstream = newName;
      }
    }
  }

  private resourcesRow(stage: Stage): HTMLElement {
    const res = stage.resources;
    return h("div", { class: "resources" },
      h("label", null, "cores",
        this.numberInput(res.cores, (v) => { res.cores = v; })),
      h("label", null, "memory (bytes)",
        this.numberInput(res.memory, (v) => { res.memory = v; })),
      h("label", null, "walltime (s)",
        this.numberInput(res.walltime, (v) => { res.walltime = v; })),
      h("label", null, "queue",
        this.textInput(res.queue, (v) => { res.queue = v; })),
    );
  }

  private parametersBlock(stage: Stage): HTMLElement {
    const rows = stage.parameters.map((parameter, index) =>
      h("div", { class: "parameter-row" },
        this.textInput(parameter.name, (v) => { parameter.name = v; },
                       "parameter name"),
        h("select", {
          class: "param-kind",
          onchange: (event: Event) => {
            parameter.kind = (event.currentTarget as HTMLSelectElement)
              .value as Parameter["kind"];
          },
        }, ...PARAM_KINDS.map((kind) =>
          h("option", { value: kind, selected: kind === parameter.kind },
            kind))),
        h("label", null,
          h("input", {
            type: "checkbox", checked: parameter.required,
            onchange: (event: Event) => {
              parameter.required =
                (event.currentTarget as HTMLInputElement).checked;
            },
          }), "required"),
        this.textInput(
          parameter.default === null || parameter.default === undefined
            ? "" : String(parameter.default),
          (v) => { parameter.default = v === "" ? null : v; }, "default"),
        h("button", {
          class: "remove-parameter",
          onclick: () => {
            stage.parameters.splice(index, 1);
            this.render();
          },
        }, "✕"),
      ));
    return h("div", { class: "parameters" },
      h("h4", null, "Parameters"),
      ...rows,
      h("button", {
        class: "add-parameter",
        onclick: () => {
          stage.parameters.push(
            { name: "", kind: "text", required: false, default: null });
          this.render();
        },
      }, "Add parameter"),
    );
  }

  private dependenciesBlock(stage: Stage): HTMLElement {
    const candidates = this.draft.stages
      .map((s) => s.name)
      .filter((name) => name !== stage.name);
    const rows = stage.dependencies.map((dep, index) =>
      this.dependencyRow(stage, dep, index, candidates));
    return h("div", { class: "dependencies" },
      h("h4", null, "Depends on"),
      ...rows,
      h("button", {
        class: "add-dependency", disabled: candidates.length === 0,
        onclick: () => {
          stage.dependencies.push(
            { upstream: candidates[0], condition: { kind: "success" } });
          this.render();
        },
      }, "Add dependency"),
    );
  }

  private dependencyRow(
    stage: Stage,
    dep: Dependency,
    index: number,
    candidates: string[],
  ): HTMLElement {
    const codesInput = h("input", {
      type: "text", class: "exit-codes",
      placeholder: "e.g. 1, 2",
      value: (dep.condition.exit_codes ?? []).join(", "),
      hidden: dep.condition.kind !== "exit-codes",
      oninput: (event: Event) => {
        dep.condition.exit_codes = parseExitCodes(
          (event.currentTarget as HTMLInputElement).value);
      },
    }) as HTMLInputElement;
    return h("div", { class: "dependency-row" },
      h("select", {
        class: "upstream",
        onchange: (event: Event) => {
          dep.upstream = (event.currentTarget as HTMLSelectElement).value;
        },
      }, ...candidates.map((name) =>
        h("option", { value: name, selected: name === dep.upstream }, name))),
      h("select", {
        class: "condition-kind",
        onchange: (event: Event) => {
          const kind = (event.currentTarget as HTMLSelectElement)
            .value as ConditionKind;
          dep.condition = conditionOfKind(kind, dep.condition);
          codesInput.hidden = kind !== "exit-codes";
        },
      }, ...CONDITION_KINDS.map((kind) =>
        h("option", { value: kind, selected: kind === dep.condition.kind },
          kind))),
      codesInput,
      h("button", {
        class: "remove-dependency",
        onclick: () => {
          stage.dependencies.splice(index, 1);
          this.render();
        },
      }, "✕"),
    );
  }

  // ----------------------------------------------------------------- share

  private shareDialog(): HTMLElement {
    const target = h("input", {
      type: "text", placeholder: "user or group name",
    }) as HTMLInputElement;
    const isGroup = h("input", { type: "checkbox" }) as HTMLInputElement;
    const level = h("select", null,
      ...(["view", "run", "edit"] as ShareLevel[]).map((l) =>
        h("option", { value: l }, l))) as HTMLSelectElement;
    const status = h("span", { class: "share-status" });
    return h("details", { class: "share-dialog" },
      h("summary", null, "Share"),
      target,
      h("label", null, isGroup, "group"),
      level,
      h("button", {
        class: "grant",
        onclick: async () => {
          try {
            const selector = isGroup.checked
              ? { group: target.value } : { user: target.value };
            await this.client.shareWorkflow(
              this.draft.id!, selector, level.value as ShareLevel);
            status.textContent =
              `granted ${level.value} to ${target.value}`;
          } catch (failure) {
            status.textContent = failure instanceof Error
              ? failure.message : String(failure);
          }
        },
      }, "Grant"),
      status,
    );
  }

  // ---------------------------------------------------------- script editor

  private scriptPane(): HTMLElement {
    const editor = h("textarea", {
      class: "script-text", rows: "12", value: this.scriptText,
      oninput: (event: Event) => {
        this.scriptText = (event.currentTarget as HTMLTextAreaElement).value;
      },
    }) as HTMLTextAreaElement;
    const nameInput = h("input", {
      type: "text", class: "script-name", placeholder: "script file name",
      value: this.openScript ?? "",
    }) as HTMLInputElement;
    const status = h("span", { class: "script-status" });
    return h("div", { class: "script-pane" },
      h("h4", null, "Scripts"),
      h("ul", { class: "script-list" },
        ...this.scriptNames.map((name) =>
          h("li", null,
            h("button", {
              class: "open-script", dataset: { script: name },
              onclick: async () => {
                this.openScript = name;
                this.scriptText =
                  await this.client.getScript(this.draft.id!, name);
                this.render();
              },
            }, name)))),
      nameInput,
      editor,
      h("button", {
        class: "save-script",
        onclick: async () => {
          const name = nameInput.value.trim();
          if (!name) {
            status.textContent = "script needs a file name";
            return;
          }
          try {
            await this.client.putScript(this.draft.id!, name, editor.value);
            this.openScript = name;
            if (!this.scriptNames.includes(name)) this.scriptNames.push(name);
            status.textContent = `saved ${name}`;
          } catch (failure) {
            status.textContent = failure instanceof Error
              ? failure.message : String(failure);
          }
        },
      }, "Save script"),
      status,
    );
  }

  // ------------------------------------------------------------ primitives

  private textInput(
    value: string,
    write: (value: string) => void,
    placeholder = "",
  ): HTMLInputElement {
    return h("input", {
      type: "text", value, placeholder,
      oninput: (event: Event) => {
        write((event.currentTarget as HTMLInputElement).value);
      },
    }) as HTMLInputElement;
  }

  private textArea(
    value: string,
    write: (value: string) => void,
  ): HTMLTextAreaElement {
    return h("textarea", {
      value, rows: "2",
      oninput: (event: Event) => {
        write((event.currentTarget as HTMLTextAreaElement).value);
      },
    }) as HTMLTextAreaElement;
  }

  private numberInput(
    value: number,
    write: (value: number) => void,
  ): HTMLInputElement {
    return h("input", {
      type: "number", value: String(value),
      oninput: (event: Event) => {
        const parsed = Number((event.currentTarget as HTMLInputElement).value);
        if (!Number.isNaN(parsed)) write(parsed);
      },
    }) as HTMLInputElement;
  }
}

function conditionOfKind(kind: ConditionKind, previous: Condition): Condition {
  if (kind === "exit-codes") {
    return { kind, exit_codes: previous.exit_codes ?? [] };
  }
  return { kind };
}
