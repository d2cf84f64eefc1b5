import { ApiClient } from "./api.js";
import { h, mount } from "./dom.js";

export function renderLogin(
  client: ApiClient,
  root: Element,
  onLoggedIn: () => void,
): void {
  const username = h("input", {
    type: "text", name: "username", autocomplete: "username",
  }) as HTMLInputElement;
  const password = h("input", {
    type: "password", name: "password", autocomplete: "current-password",
  }) as HTMLInputElement;
  const problem = h("p", { class: "login-problem", hidden: true });

  const form = h("form", {
    class: "login-form",
    onsubmit: async (event: Event) => {
      event.preventDefault();
      try {
        await client.login(username.value, password.value);
        onLoggedIn();
      } catch (failure) {
        problem.textContent = failure instanceof Error
          ? failure.message : String(failure);
        problem.hidden = false;
      }
    },
  },
    h("h2", null, "Sign in"),
    problem,
    h("div", { class: "field" }, h("label", null, "Username"), username),
    h("div", { class: "field" }, h("label", null, "Password"), password),
    h("button", { type: "submit" }, "Sign in"),
  );
  mount(root, form);
}
