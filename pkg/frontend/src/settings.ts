import { ApiClient } from "./api.js";
import { h, mount } from "./dom.js";
import { formatBytes } from "./format.js";
import type {
  Alteration, NodeInfo, QueueInfo, ServerSettings,
} from "./types.js";

/** Admin page: node and queue lifecycle, server knobs, and the pending
 *  alteration queue. Every action reloads from the server. */
export class SettingsPage {
  private nodes: NodeInfo[] = [];
  private queues: QueueInfo[] = [];
  private settings: ServerSettings | null = null;
  private alterations: Alteration[] = [];
  private notice = "";

  constructor(
    private readonly client: ApiClient,
    private readonly root: Element,
  ) {}

  async load(): Promise<void> {
    [this.nodes, this.queues, this.settings, this.alterations] =
      await Promise.all([
        this.client.listNodes(),
        this.client.listQueues(),
        this.client.getSettings(),
        this.client.listAlterations(),
      ]);
    this.render();
  }

  private async act(call: () => Promise<unknown>): Promise<void> {
    try {
      await call();
      this.notice = "";
      await this.load();
    } catch (failure) {
      this.notice = failure instanceof Error
        ? failure.message : String(failure);
      this.render();
    }
  }

  render(): void {
    mount(this.root,
      h("section", { class: "settings" },
        h("h2", null, "Cluster settings"),
        this.notice ? h("p", { class: "banner" }, this.notice) : null,
        this.nodesBlock(),
        this.queuesBlock(),
        this.serverBlock(),
        this.alterationsBlock(),
      ),
    );
  }

  private nodesBlock(): HTMLElement {
    const name = h("input", { type: "text", placeholder: "name" }) as
      HTMLInputElement;
    const cores = h("input", { type: "number", value: "4", min: "1" }) as
      HTMLInputElement;
    const memory = h("input",
      { type: "number", value: String(8 * 1024 ** 3), min: "1" }) as
      HTMLInputElement;
    return h("div", { class: "nodes-admin" },
      h("h3", null, "Nodes"),
      h("table", null,
        h("thead", null, h("tr", null,
          ...["Name", "State", "Cores", "Memory", ""].map(
            (t) => h("th", null, t)))),
        h("tbody", null, ...this.nodes.map((node) =>
          h("tr", { dataset: { node: node.name } },
            h("td", null, node.name),
            h("td", null, node.state),
            h("td", null, `${node.cores_used}/${node.cores_total}`),
            h("td", null, formatBytes(node.memory_total)),
            h("td", null,
              h("button", {
                class: "toggle-node",
                onclick: () => void this.act(() => this.client.setNodeState(
                  node.name,
                  node.state === "online" ? "offline" : "online")),
              }, node.state === "online" ? "take offline" : "bring online"),
              h("button", {
                class: "remove-node",
                onclick: () =>
                  void this.act(() => this.client.removeNode(node.name)),
              }, "remove")),
          )))),
      h("div", { class: "add-node" },
        name, cores, memory,
        h("button", {
          class: "add-node-button",
          onclick: () => void this.act(() => this.client.addNode(
            name.value, Number(cores.value), Number(memory.value))),
        }, "Add node")),
    );
  }

  private queuesBlock(): HTMLElement {
    const name = h("input", { type: "text", placeholder: "queue name" }) as
      HTMLInputElement;
    return h("div", { class: "queues-admin" },
      h("h3", null, "Queues"),
      h("ul", null, ...this.queues.map((queue) =>
        h("li", { dataset: { queue: queue.name } },
          `${queue.name} (${queue.enabled ? "enabled" : "disabled"})`,
          h("button", {
            class: "toggle-queue",
            onclick: () => void this.act(() => this.client.updateQueue(
              queue.name, { enabled: !queue.enabled })),
          }, queue.enabled ? "disable" : "enable"),
          h("button", {
            class: "remove-queue",
            onclick: () =>
              void this.act(() => this.client.removeQueue(queue.name)),
          }, "remove"),
        ))),
      name,
      h("button", {
        class: "add-queue-button",
        onclick: () =>
          void this.act(() => this.client.addQueue({ name: name.value })),
      }, "Add queue"),
    );
  }

  private serverBlock(): HTMLElement {
    const s = this.settings;
    if (!s) return h("div");
    const tick = h("input", {
      type: "number", step: "0.1", value: String(s.tick_interval),
    }) as HTMLInputElement;
    const queue = h("input", { type: "text", value: s.default_queue }) as
      HTMLInputElement;
    const grace = h("input", {
      type: "number", step: "0.5", value: String(s.grace_seconds),
    }) as HTMLInputElement;
    return h("div", { class: "server-admin" },
      h("h3", null, `Server (${s.server_name})`),
      h("label", null, "tick interval (s)", tick),
      h("label", null, "default queue", queue),
      h("label", null, "kill grace (s)", grace),
      h("button", {
        class: "save-settings",
        onclick: () => void this.act(() => this.client.updateSettings({
          tick_interval: Number(tick.value),
          default_queue: queue.value,
          grace_seconds: Number(grace.value),
        })),
      }, "Apply"),
    );
  }

  private alterationsBlock(): HTMLElement {
    const pending = this.alterations.filter((a) => a.state === "pending");
    return h("div", { class: "alterations-admin" },
      h("h3", null, "Pending alterations"),
      pending.length === 0
        ? h("p", { class: "empty" }, "nothing pending")
        : h("ul", null, ...pending.map((alteration) =>
            h("li", { dataset: { alteration: alteration.id } },
              `job ${alteration.job_id}: ` +
              `${JSON.stringify(alteration.changes)} ` +
              `(by ${alteration.requester})`,
              h("button", {
                class: "approve",
                onclick: () => void this.act(
                  () => this.client.decideAlteration(alteration.id, true)),
              }, "approve"),
              h("button", {
                class: "deny",
                onclick: () => void this.act(
                  () => this.client.decideAlteration(alteration.id, false)),
              }, "deny"),
            ))),
    );
  }
}
