/** Thin hyperscript layer: h() builds real DOM nodes, replaceChildren-style
 *  re-renders keep every page a pure projection of fetched data. */

export type Child = Node | string | number | null | undefined | false;

type Props = Record<string, unknown> | null;

export function h(
  tag: string,
  props: Props = null,
  ...children: (Child | Child[])[]
): HTMLElement {
  const el = document.createElement(tag);
  if (props) {
    for (const [key, value] of Object.entries(props)) {
      if (value === undefined || value === null || value === false) continue;
      if (key.startsWith("on") && typeof value === "function") {
        el.addEventListener(key.slice(2),
                            value as EventListenerOrEventListenerObject);
      } else if (key === "class") {
        el.className = String(value);
      } else if (key === "dataset") {
        Object.assign(el.dataset, value);
      } else if (key in el && key !== "list" && key !== "form") {
        // Direct property assignment keeps booleans (checked, disabled)
        // and value semantics intact.
        (el as unknown as Record<string, unknown>)[key] = value;
      } else {
        el.setAttribute(key, String(value));
      }
    }
  }
  for (const child of children.flat()) {
    if (child === null || child === undefined || child === false) continue;
    el.append(child instanceof Node ? child : String(child));
  }
  return el;
}

export function mount(root: Element, ...content: HTMLElement[]): void {
  root.replaceChildren(...content);
}

export function clear(root: Element): void {
  root.replaceChildren();
}
