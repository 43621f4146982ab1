import { AgentApi, Consent, ServerApi } from "./api.js";

/** Shared console state. The session token stays in memory only. */
export class AppState {
  agent: AgentApi;
  server: ServerApi;
  email = "";
  consent: Consent = { motion: true, location: true, health: true, video: true, vehicle: true };
  liveUpload = true;
  onConsentChange: (() => void)[] = [];

  constructor(agentBase: string, serverBase: string) {
    this.agent = new AgentApi(agentBase);
    this.server = new ServerApi(serverBase);
  }

  get authenticated(): boolean {
    return this.server.token !== null;
  }

  setConsent(consent: Consent): void {
    this.consent = consent;
    for (const fn of this.onConsentChange) fn();
  }
}

/** Base URLs come from the query string or default to the local stack. */
export function basesFromLocation(loc: { search: string }): { agent: string; server: string } {
  const params = new URLSearchParams(loc.search);
  return {
    agent: params.get("agent") ?? "http://127.0.0.1:7465",
    server: params.get("server") ?? "http://127.0.0.1:8080",
  };
}

export function formatBytes(n: number): string {
  if (n < 1024) return `${n} B`;
  if (n < 1024 * 1024) return `${(n / 1024).toFixed(1)} KiB`;
  return `${(n / (1024 * 1024)).toFixed(1)} MiB`;
}

export function formatWhen(ms: number): string {
  return new Date(ms).toISOString().replace("T", " ").slice(0, 19);
}
