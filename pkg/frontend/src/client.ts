/** Thin typed wrapper over the orchestrator HTTP API.
 *
 * Every console mutation goes through exactly one of these calls; the
 * fetch implementation is injectable so tests run against canned replies.
 */

import type {
  ApiErrorBody,
  DeviceStateDto,
  Modifier,
  RunRecordDto,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

/** Server replied with a structured {"error": {code, message}} body. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

/** Network-level failure: server unreachable, not a rejected request. */
export class OfflineError extends Error {
  constructor(cause: unknown) {
    super(`server unreachable: ${String(cause)}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    path: string,
    method: "GET" | "POST",
    body?: unknown,
  ): Promise<T> {
    let resp;
    try {
      resp = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: body === undefined ? {} : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new OfflineError(cause);
    }
    if (!resp.ok) {
      let code = "HTTP_ERROR";
      let message = `request failed with status ${resp.status}`;
      try {
        const parsed = (await resp.json()) as ApiErrorBody;
        if (parsed.error) {
          code = parsed.error.code;
          message = parsed.error.message;
        }
      } catch {
        // non-JSON error body: keep the generic code
      }
      throw new ApiError(code, message, resp.status);
    }
    return (await resp.json()) as T;
  }

  mix(text: string, volumeMl?: number): Promise<RunRecordDto> {
    return this.request("/api/mix", "POST", {
      text,
      volume_ml: volumeMl ?? null,
    });
  }

  adjust(runId: number, modifier: Modifier): Promise<RunRecordDto> {
    return this.request("/api/adjust", "POST", {
      run_id: runId,
      modifier,
    });
  }

  state(): Promise<DeviceStateDto> {
    return this.request("/api/state", "GET");
  }

  history(limit = 20): Promise<RunRecordDto[]> {
    return this.request(`/api/history?limit=${limit}`, "GET");
  }
}
