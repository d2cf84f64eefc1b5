import { ApiClient } from "./api.js";
import { WorkflowBuilder, emptyWorkflow } from "./builder.js";
import { DashboardPage } from "./dashboard.js";
import { h, mount } from "./dom.js";
import { JobDetailPage } from "./jobdetail.js";
import { renderLogin } from "./login.js";
import { buildRunForm } from "./runform.js";
import { SettingsPage } from "./settings.js";
import { WorkflowListPage } from "./workflows.js";

/** Hash router: every navigation tears the old page down and rebuilds the
 *  new one from API data, so a browser reload lands in the same state. */
export class Router {
  private stopActive: (() => void) | null = null;
  private outlet: HTMLElement;
  private nav: HTMLElement;
  private readonly onHashChange = (): void => void this.dispatch();

  constructor(
    private readonly client: ApiClient,
    private readonly root: Element,
    private readonly window_: Window = window,
  ) {
    this.outlet = h("main", { class: "outlet" });
    this.nav = h("nav", { class: "topnav" });
    mount(root, this.nav, this.outlet);
    client.onUnauthenticated = () => this.navigate("#/login");
    this.window_.addEventListener("hashchange", this.onHashChange);
  }

  start(): Promise<void> {
    return this.dispatch();
  }

  /** Tear down the active page and stop listening for navigation. */
  stop(): void {
    if (this.stopActive) this.stopActive();
    this.stopActive = null;
    this.window_.removeEventListener("hashchange", this.onHashChange);
  }

  navigate(hash: string): void {
    if (this.window_.location.hash === hash) {
      void this.dispatch();
    } else {
      this.window_.location.hash = hash;
      // jsdom fires hashchange asynchronously; dispatch directly so tests
      // and slow browsers render without waiting for the event loop.
      void this.dispatch();
    }
  }

  private renderNav(): void {
    const identity = this.client.identity;
    if (!identity) {
      mount(this.nav);
      return;
    }
    const links = [
      h("a", { href: "#/dashboard" }, "Dashboard"),
      h("a", { href: "#/workflows" }, "Workflows"),
    ];
    if (identity.is_admin) {
      links.push(h("a", { href: "#/settings" }, "Settings"));
    }
    mount(this.nav,
      ...links,
      h("span", { class: "spacer" }),
      h("span", { class: "whoami" }, identity.username),
      h("button", {
        class: "logout",
        onclick: async () => {
          await this.client.logout().catch(() => undefined);
          this.navigate("#/login");
        },
      }, "Sign out"),
    );
  }

  private async dispatch(): Promise<void> {
    if (this.stopActive) this.stopActive();
    this.stopActive = null;

    const hash = this.window_.location.hash || "#/dashboard";
    if (!this.client.authenticated && hash !== "#/login") {
      this.navigate("#/login");
      return;
    }
    this.renderNav();

    const segments = hash.replace(/^#\//, "").split("/");
    try {
      await this.route(segments);
    } catch (failure) {
      mount(this.outlet, h("p", { class: "banner" },
        failure instanceof Error ? failure.message : String(failure)));
    }
  }

  private async route(segments: string[]): Promise<void> {
    switch (segments[0]) {
      case "login": {
        renderLogin(this.client, this.outlet,
                    () => this.navigate("#/dashboard"));
        return;
      }
      case "jobs": {
        const page = new JobDetailPage(this.client, this.outlet, segments[1], {
          onGone: () => this.navigate("#/dashboard"),
        });
        await page.load();
        return;
      }
      case "workflows": {
        if (segments.length === 1) {
          const page = new WorkflowListPage(this.client, this.outlet, {
            onRun: (id) => this.navigate(`#/workflows/${id}/run`),
            onEdit: (id) => this.navigate(`#/workflows/${id}/edit`),
            onNew: () => this.navigate("#/workflows/new"),
            onImported: (wf) => this.navigate(`#/workflows/${wf.id}/edit`),
          });
          await page.load();
          return;
        }
        if (segments[1] === "new") {
          new WorkflowBuilder(this.client, this.outlet, emptyWorkflow(), {
            onSaved: (wf) => this.navigate(`#/workflows/${wf.id}/edit`),
          });
          return;
        }
        const id = segments[1];
        if (segments[2] === "run") {
          await this.runFormPage(id);
          return;
        }
        const workflow = await this.client.getWorkflow(id);
        new WorkflowBuilder(this.client, this.outlet, workflow, {
          onSaved: () => undefined,
        });
        return;
      }
      case "settings": {
        const page = new SettingsPage(this.client, this.outlet);
        await page.load();
        return;
      }
      default: {
        const page = new DashboardPage(this.client, this.outlet, {
          onOpenJob: (id) => this.navigate(`#/jobs/${id}`),
        });
        this.stopActive = () => page.stop();
        await page.start();
        return;
      }
    }
  }

  private async runFormPage(workflowId: string): Promise<void> {
    const [workflow, profiles] = await Promise.all([
      this.client.getWorkflow(workflowId),
      this.client.listProfiles(workflowId),
    ]);
    const form = buildRunForm(workflow, profiles, {
      onSubmit: async (inputs) => {
        const job = await this.client.submitJob(workflowId, inputs);
        this.navigate(`#/jobs/${job.id}`);
      },
    });
    mount(this.outlet, form);
  }
}
