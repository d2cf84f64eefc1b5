import { h } from "./dom.js";
import type { Parameter, Profile, Workflow } from "./types.js";

export interface RunFormHandlers {
  onSubmit(inputs: Record<string, unknown>): void;
}

interface Control {
  parameter: Parameter;
  input: HTMLInputElement;
  field: HTMLElement;
  hint: HTMLElement;
}

const INPUT_TYPES: Record<Parameter["kind"], string> = {
  "text": "text",
  "number": "number",
  "flag": "checkbox",
  "input-file": "file",
};

/** All parameters of the workflow, first declaration wins (same rule the
 *  server applies when two stages declare the same name). */
export function workflowParameters(workflow: Workflow): Parameter[] {
  const seen = new Map<string, Parameter>();
  for (const stage of workflow.stages) {
    for (const parameter of stage.parameters) {
      if (!seen.has(parameter.name)) seen.set(parameter.name, parameter);
    }
  }
  return [...seen.values()];
}

function buildControl(parameter: Parameter): Control {
  const input = h("input", {
    type: INPUT_TYPES[parameter.kind],
    name: parameter.name,
    id: `param-${parameter.name}`,
    dataset: { kind: parameter.kind },
  }) as HTMLInputElement;
  if (parameter.default !== null && parameter.default !== undefined) {
    if (parameter.kind === "flag") {
      input.checked = Boolean(parameter.default);
    } else if (parameter.kind !== "input-file") {
      input.value = String(parameter.default);
    }
  }
  const hint = h("span", { class: "field-hint", hidden: true });
  const field = h("div", { class: "field", dataset: { field: parameter.name } },
    h("label", { htmlFor: input.id },
      parameter.name,
      parameter.required ? h("span", { class: "required-mark" }, " *") : null,
    ),
    input,
    hint,
  );
  return { parameter, input, field, hint };
}

function controlValue(control: Control): unknown | undefined {
  const { parameter, input } = control;
  switch (parameter.kind) {
    case "flag":
      return input.checked;
    case "number":
      return input.value.trim() === "" ? undefined : Number(input.value);
    case "input-file":
      return input.files && input.files.length
        ? input.files[0].name : undefined;
    default:
      return input.value === "" ? undefined : input.value;
  }
}

function controlProblem(control: Control): string | null {
  const { parameter } = control;
  const value = controlValue(control);
  if (parameter.kind === "number" && value !== undefined
      && Number.isNaN(value)) {
    return "not a number";
  }
  if (parameter.required && parameter.kind !== "flag" && value === undefined) {
    return "required";
  }
  return null;
}

/** Generated submission form: one control per declared parameter, an input
 *  profile selector that pre-fills values, and client-side validation that
 *  keeps the submit button dead until every required field is set. */
export function buildRunForm(
  workflow: Workflow,
  profiles: Profile[],
  handlers: RunFormHandlers,
): HTMLElement {
  const controls = workflowParameters(workflow).map(buildControl);
  const byName = new Map(controls.map((c) => [c.parameter.name, c]));

  const submit = h("button", {
    type: "submit", class: "submit", disabled: true,
  }, "Submit job") as HTMLButtonElement;

  const validate = () => {
    let allGood = true;
    for (const control of controls) {
      const problem = controlProblem(control);
      control.field.classList.toggle("invalid", problem !== null);
      control.input.setAttribute("aria-invalid", String(problem !== null));
      control.hint.hidden = problem === null;
      control.hint.textContent = problem ?? "";
      if (problem !== null) allGood = false;
    }
    submit.disabled = !allGood;
  };

  for (const control of controls) {
    control.input.addEventListener("input", validate);
    control.input.addEventListener("change", validate);
  }

  const profileSelect = h("select", {
    class: "profile-select",
    onchange: (event: Event) => {
      const select = event.currentTarget as HTMLSelectElement;
      const profile = profiles.find((p) => p.id === select.value);
      if (profile) applyProfile(profile);
      validate();
    },
  },
    h("option", { value: "" }, "— no profile —"),
    ...profiles.map((p) => h("option", { value: p.id }, p.name)),
  ) as HTMLSelectElement;

  const applyProfile = (profile: Profile) => {
    for (const [name, value] of Object.entries(profile.values)) {
      const control = byName.get(name);
      if (!control) continue;
      if (control.parameter.kind === "flag") {
        control.input.checked = Boolean(value);
      } else if (control.parameter.kind !== "input-file") {
        control.input.value = String(value);
      }
    }
  };

  const collect = (): Record<string, unknown> => {
    const inputs: Record<string, unknown> = {};
    for (const control of controls) {
      const value = controlValue(control);
      if (value !== undefined) inputs[control.parameter.name] = value;
    }
    return inputs;
  };

  const form = h("form", {
    class: "run-form",
    onsubmit: (event: Event) => {
      event.preventDefault();
      if (submit.disabled) return;
      handlers.onSubmit(collect());
    },
  },
    h("h2", null, `Run ${workflow.name}`),
    profiles.length
      ? h("div", { class: "field" },
          h("label", null, "Input profile"), profileSelect)
      : null,
    ...controls.map((c) => c.field),
    submit,
  );
  validate();
  return form;
}
