/** Typed client for the annotation service HTTP API. */

export interface TargetTask {
  index: number;
  part: number;
  x: number;
  y: number;
}

export interface Progress {
  done: number;
  total: number;
}

export interface Projection {
  view: number;
  x: number;
  y: number;
  visible: boolean;
}

export interface StoredPoint {
  target: number;
  view: number;
  pixel: [number, number];
  face: number;
  part: number;
  u: number;
  v: number;
  vertex: number;
  projections: Projection[];
}

export interface NextTask {
  done: boolean;
  target: TargetTask | null;
  progress: Progress;
  last: StoredPoint | null;
}

export interface ClickResult {
  point: StoredPoint;
  projections: Projection[];
}

export interface ViewMeta {
  part: number;
  view_index: number;
  resolution: number;
}

/** Error carrying the service's {code, message} payload. */
export class ServiceError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export interface ServiceClient {
  nextTask(sessionId: string): Promise<NextTask>;
  submitClick(
    sessionId: string,
    target: number,
    view: number,
    x: number,
    y: number,
  ): Promise<ClickResult>;
  viewImageUrl(part: number, view: number): string;
  viewMeta(part: number, view: number): Promise<ViewMeta>;
}

const RETRIES = 4;
const BACKOFF_MS = 150;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * fetch-based client. Network failures retry with exponential backoff;
 * HTTP error responses do not retry and surface as ServiceError.
 */
export class HttpServiceClient implements ServiceClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: typeof fetch = fetch,
    private readonly delay: (ms: number) => Promise<void> = sleep,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= RETRIES; attempt++) {
      if (attempt > 0) {
        await this.delay(BACKOFF_MS * 2 ** (attempt - 1));
      }
      let response: Response;
      try {
        response = await this.fetchFn(`${this.base}${path}`, init);
      } catch (err) {
        lastError = err; // network failure: retry
        continue;
      }
      if (!response.ok) {
        let code = "HTTP_ERROR";
        let message = `${response.status}`;
        try {
          const body = (await response.json()) as { code?: string; message?: string };
          code = body.code ?? code;
          message = body.message ?? message;
        } catch {
          // non-JSON error body; keep defaults
        }
        throw new ServiceError(code, message, response.status);
      }
      return (await response.json()) as T;
    }
    throw lastError instanceof Error
      ? lastError
      : new Error(`network failure: ${String(lastError)}`);
  }

  nextTask(sessionId: string): Promise<NextTask> {
    return this.request<NextTask>(`/sessions/${sessionId}/next-task`);
  }

  submitClick(
    sessionId: string,
    target: number,
    view: number,
    x: number,
    y: number,
  ): Promise<ClickResult> {
    return this.request<ClickResult>(`/sessions/${sessionId}/clicks`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ target, view, x, y }),
    });
  }

  viewImageUrl(part: number, view: number): string {
    return `${this.base}/parts/${part}/views/${view}`;
  }

  viewMeta(part: number, view: number): Promise<ViewMeta> {
    return this.request<ViewMeta>(`/parts/${part}/views/${view}/meta`);
  }
}
