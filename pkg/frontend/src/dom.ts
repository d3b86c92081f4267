/** DOM helpers. Views build elements off their mount point's document,
 * so they work in any Window (browser or test harness). */

export type Child = Node | string | null | undefined | false;

export function append(parent: Element, ...children: Child[]): void {
  const doc = parent.ownerDocument;
  for (const child of children) {
    if (child === null || child === undefined || child === false) continue;
    parent.append(typeof child === "string" ? doc.createTextNode(child) : child);
  }
}

export function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  append(node, ...children);
  return node;
}

export function clear(node: Element): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}
