/** Typed clients for the two documented APIs the console is allowed to
 * talk to: the recorder agent's control API and the ingestion service.
 * Every request funnels through one `call` helper so tests can record
 * the exact surface used. */

export interface ApiCall {
  method: string;
  url: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message || code);
  }
}

export type CallRecorder = (call: ApiCall) => void;

let recorder: CallRecorder | null = null;

/** Tests install a recorder to verify only documented endpoints are hit. */
export function recordCalls(fn: CallRecorder | null): void {
  recorder = fn;
}

async function call<T>(method: string, url: string, body?: unknown, token?: string): Promise<T> {
  recorder?.({ method, url });
  const headers: Record<string, string> = {};
  if (body !== undefined) headers["Content-Type"] = "application/json";
  if (token) headers["Authorization"] = `Bearer ${token}`;
  let resp: Response;
  try {
    resp = await fetch(url, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  } catch (err) {
    throw new ApiError(0, "NETWORK", String(err));
  }
  let payload: any = {};
  try {
    payload = await resp.json();
  } catch {
    /* empty or non-JSON body */
  }
  if (!resp.ok) {
    throw new ApiError(resp.status, payload.error ?? "HTTP_ERROR", payload.message ?? "");
  }
  return payload as T;
}

// ---- agent control API -----------------------------------------------------

export interface Sampled {
  value: number;
  t: number;
}

export interface LiveStatus {
  recording: boolean;
  sessionId: string | null;
  elapsedMs: number;
  heartRate: Sampled | null;
  vehicleSpeed: Sampled | null;
  accelerationZ: Sampled | null;
  obdState: string;
  warnings: string[];
}

export interface ChunkRef {
  index: number;
  stream: string;
  byteLength: number;
  digest: string;
}

export interface Manifest {
  sessionId: string;
  userId: string;
  createdAt: number;
  streams: string[];
  chunks: ChunkRef[];
  status: string;
  settings: Settings;
}

export interface Settings {
  frameRate: number;
  frequency: number;
  automaticUpload: boolean;
}

export interface UploadTask {
  taskId: string;
  sessionId: string;
  mode: string;
  state: string;
  bytesSent: number;
  bytesTotal: number;
  attempts: number;
  lastError: string | null;
}

export interface Consent {
  motion: boolean;
  location: boolean;
  health: boolean;
  video: boolean;
  vehicle: boolean;
}

export class AgentApi {
  constructor(public base: string) {}

  status(): Promise<LiveStatus> {
    return call("GET", `${this.base}/control/status`);
  }

  startRecording(consent: Consent, liveUpload = false): Promise<{ sessionId: string }> {
    return call("POST", `${this.base}/control/record/start`, { consent, liveUpload });
  }

  stopRecording(): Promise<{ manifest: Manifest }> {
    return call("POST", `${this.base}/control/record/stop`, {});
  }

  sessions(): Promise<{ sessions: Manifest[] }> {
    return call("GET", `${this.base}/control/sessions`);
  }

  sessionDetail(id: string): Promise<{ manifest: Manifest; recordCounts: Record<string, number> }> {
    return call("GET", `${this.base}/control/sessions/${id}`);
  }

  deleteSession(id: string): Promise<unknown> {
    return call("DELETE", `${this.base}/control/sessions/${id}`);
  }

  enqueueUpload(id: string): Promise<{ task: UploadTask }> {
    return call("POST", `${this.base}/control/sessions/${id}/upload`, {});
  }

  uploads(): Promise<{ tasks: UploadTask[] }> {
    return call("GET", `${this.base}/control/uploads`);
  }

  pause(taskId: string): Promise<{ task: UploadTask }> {
    return call("POST", `${this.base}/control/uploads/${taskId}/pause`, {});
  }

  resume(taskId: string): Promise<{ task: UploadTask }> {
    return call("POST", `${this.base}/control/uploads/${taskId}/resume`, {});
  }

  cancel(taskId: string): Promise<{ task: UploadTask }> {
    return call("POST", `${this.base}/control/uploads/${taskId}/cancel`, {});
  }

  settings(): Promise<Settings> {
    return call("GET", `${this.base}/control/settings`);
  }

  saveSettings(settings: Settings): Promise<Settings> {
    return call("PUT", `${this.base}/control/settings`, settings);
  }
}

// ---- ingestion service API ---------------------------------------------------

export interface SeriesResponse {
  sessionId: string;
  stream: string;
  field: string;
  points: [number, number][];
}

export class ServerApi {
  /** The bearer token lives in memory only; nothing touches storage. */
  token: string | null = null;

  constructor(public base: string) {}

  register(email: string, password: string): Promise<{ userId: string; state: string }> {
    return call("POST", `${this.base}/v1/register`, { email, password });
  }

  confirm(email: string, code: string): Promise<{ state: string }> {
    return call("POST", `${this.base}/v1/confirm`, { email, code });
  }

  async login(email: string, password: string): Promise<string> {
    const body = await call<{ token: string }>("POST", `${this.base}/v1/login`, { email, password });
    this.token = body.token;
    return body.token;
  }

  setConsent(consent: Consent): Promise<Consent> {
    return call("PUT", `${this.base}/v1/consent`, consent, this.token ?? undefined);
  }

  sessions(): Promise<{ sessions: Manifest[] }> {
    return call("GET", `${this.base}/v1/sessions`, undefined, this.token ?? undefined);
  }

  series(sessionId: string, stream: string, points: number, field?: string): Promise<SeriesResponse> {
    const fieldParam = field ? `&field=${encodeURIComponent(field)}` : "";
    return call(
      "GET",
      `${this.base}/v1/sessions/${sessionId}/series/${stream}?points=${points}${fieldParam}`,
      undefined,
      this.token ?? undefined,
    );
  }
}
