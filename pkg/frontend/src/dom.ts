// Small DOM helpers shared by the views.

/**
 * Escape a string for interpolation into an innerHTML template.
 * Uses the browser's own serializer so nothing is missed.
 */
export function escapeHtml(text: string): string {
  const div = document.createElement("div");
  div.textContent = text;
  return div.innerHTML;
}

/**
 * Look up a descendant by its data-element tag, throwing when absent.
 * Rendering and event binding go through this so a template typo fails
 * loudly instead of silently skipping a handler.
 */
export function mustFind<T extends HTMLElement>(root: ParentNode, name: string): T {
  const el = root.querySelector<T>(`[data-element="${name}"]`);
  if (!el) {
    throw new Error(`template is missing [data-element="${name}"]`);
  }
  return el;
}
