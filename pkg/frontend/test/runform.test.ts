import { describe, expect, it } from "vitest";
import { buildRunForm, workflowParameters } from "../src/runform";
import { formWorkflowFixture, profileFixture } from "./helpers";
import type { Workflow } from "../src/types";

function edit(input: HTMLInputElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

function toggle(input: HTMLInputElement, checked: boolean): void {
  input.checked = checked;
  input.dispatchEvent(new Event("change", { bubbles: true }));
}

function choose(select: HTMLSelectElement, value: string): void {
  select.value = value;
  select.dispatchEvent(new Event("change", { bubbles: true }));
}

function submitForm(form: HTMLElement): void {
  form.dispatchEvent(new Event("submit", { cancelable: true }));
}

function control(form: HTMLElement, name: string): HTMLInputElement {
  return form.querySelector(`input[name="${name}"]`) as HTMLInputElement;
}

describe("run form generation", () => {
  it("[ACCEPTANCE] a {text, number, flag} workflow renders 3 controls of matching kinds", () => {
    const form = buildRunForm(formWorkflowFixture(), [], {
      onSubmit: () => undefined,
    });
    const inputs = form.querySelectorAll("input");
    expect(inputs).toHaveLength(3);
    expect(control(form, "message").type).toBe("text");
    expect(control(form, "count").type).toBe("number");
    expect(control(form, "loud").type).toBe("checkbox");
  });

  it("renders a file control for input-file parameters", () => {
    const wf = formWorkflowFixture();
    wf.stages[0].parameters.push(
      { name: "ligand", kind: "input-file", required: false, default: null });
    const form = buildRunForm(wf, [], { onSubmit: () => undefined });
    expect(control(form, "ligand").type).toBe("file");
  });

  it("collapses the same parameter declared by several stages into one control", () => {
    const wf = formWorkflowFixture();
    wf.stages.push({
      ...wf.stages[0],
      name: "again",
      dependencies: [],
    });
    expect(workflowParameters(wf)).toHaveLength(3);
    const form = buildRunForm(wf, [], { onSubmit: () => undefined });
    expect(form.querySelectorAll("input")).toHaveLength(3);
  });

  it("prefills declared defaults", () => {
    const form = buildRunForm(formWorkflowFixture(), [], {
      onSubmit: () => undefined,
    });
    expect(control(form, "count").value).toBe("1");
    expect(control(form, "loud").checked).toBe(false);
  });

  it("[ACCEPTANCE] profile prefill plus one edit submits the profile values with that override", () => {
    const submissions: Record<string, unknown>[] = [];
    const form = buildRunForm(formWorkflowFixture(), [profileFixture()], {
      onSubmit: (inputs) => submissions.push(inputs),
    });

    choose(form.querySelector(".profile-select") as HTMLSelectElement, "p1");
    expect(control(form, "message").value).toBe("hello");
    expect(control(form, "count").value).toBe("3");
    expect(control(form, "loud").checked).toBe(true);

    edit(control(form, "count"), "5");
    submitForm(form);

    expect(submissions).toHaveLength(1);
    expect(submissions[0]).toEqual({ message: "hello", count: 5, loud: true });
  });

  it("keeps submit dead and flags the field while a required value is missing", () => {
    const submissions: unknown[] = [];
    const form = buildRunForm(formWorkflowFixture(), [], {
      onSubmit: (inputs) => submissions.push(inputs),
    });
    const submit = form.querySelector("button.submit") as HTMLButtonElement;
    const messageField = form.querySelector(
      '[data-field="message"]') as HTMLElement;

    expect(submit.disabled).toBe(true);
    expect(messageField.classList.contains("invalid")).toBe(true);
    expect(messageField.querySelector(".field-hint")!.textContent)
      .toBe("required");

    submitForm(form);
    expect(submissions).toHaveLength(0);

    edit(control(form, "message"), "hi there");
    expect(submit.disabled).toBe(false);
    expect(messageField.classList.contains("invalid")).toBe(false);

    submitForm(form);
    expect(submissions).toHaveLength(1);
  });

  it("submits numbers as numbers and skips untouched optional text", () => {
    const wf: Workflow = formWorkflowFixture();
    wf.stages[0].parameters.push(
      { name: "note", kind: "text", required: false, default: null });
    const submissions: Record<string, unknown>[] = [];
    const form = buildRunForm(wf, [], {
      onSubmit: (inputs) => submissions.push(inputs),
    });
    edit(control(form, "message"), "go");
    edit(control(form, "count"), "2.5");
    submitForm(form);
    expect(submissions[0]).toEqual({ message: "go", count: 2.5, loud: false });
    expect("note" in submissions[0]).toBe(false);
  });

  it("clearing a required field after a profile prefill disables submit again", () => {
    const form = buildRunForm(formWorkflowFixture(), [profileFixture()], {
      onSubmit: () => undefined,
    });
    const submit = form.querySelector("button.submit") as HTMLButtonElement;
    choose(form.querySelector(".profile-select") as HTMLSelectElement, "p1");
    expect(submit.disabled).toBe(false);
    edit(control(form, "message"), "");
    expect(submit.disabled).toBe(true);
  });
});
