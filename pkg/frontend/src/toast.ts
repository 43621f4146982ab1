/** Non-blocking error/info toasts; API failures surface here so the
 * console itself never crashes on them. */

let host: HTMLElement | null = null;

export function mountToasts(parent: HTMLElement): void {
  host = parent.ownerDocument.createElement("div");
  host.className = "toast-host";
  parent.appendChild(host);
}

export function toast(message: string, kind: "error" | "info" = "error"): void {
  if (!host) return;
  const el = host.ownerDocument.createElement("div");
  el.className = `toast toast-${kind}`;
  el.textContent = message;
  host.appendChild(el);
  setTimeout(() => el.remove(), 6000);
}

/** Run an API action, toasting any failure instead of throwing. */
export async function guarded<T>(action: () => Promise<T>, what: string): Promise<T | null> {
  try {
    return await action();
  } catch (err: any) {
    toast(`${what}: ${err?.code ?? ""} ${err?.message ?? err}`.trim());
    return null;
  }
}
