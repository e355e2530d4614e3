/**
 * Thin typed client for the stagescore batch reward service.
 *
 * Transport failures (connection refused, resets, timeouts) are retried
 * with exponential backoff because the service is stateless and scoring is
 * idempotent. Structured service errors (4xx/5xx bodies) are never
 * retried: a reward-semantics error must surface, not be masked by a
 * retry loop.
 */

import type {
  ClientConfig,
  ConfigResponse,
  HealthResponse,
  ScoreBatchOptions,
  ScoreResponse,
} from "./types.js";

/** A non-2xx response from the service, carrying its structured message. */
export class ServiceError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: string;

  constructor(status: number, code: string, detail: string) {
    super(`service error ${status} (${code}): ${detail}`);
    this.name = "ServiceError";
    this.status = status;
    this.code = code;
    this.detail = detail;
  }
}

/** The service could not be reached; retries were exhausted. */
export class TransportError extends Error {
  readonly attempts: number;

  constructor(message: string, attempts: number, cause?: unknown) {
    super(`${message} after ${attempts} attempt(s)`, { cause });
    this.name = "TransportError";
    this.attempts = attempts;
  }
}

const sleep = (seconds: number) => new Promise((resolve) => setTimeout(resolve, seconds * 1000));

export class RewardClient {
  private readonly baseUrl: string;
  private readonly timeoutSeconds: number;
  private readonly maxRetries: number;
  private readonly backoffBaseSeconds: number;

  constructor(config: ClientConfig) {
    if (!(config.timeoutSeconds === undefined || config.timeoutSeconds > 0)) {
      throw new Error("timeoutSeconds must be > 0");
    }
    if (!(config.maxRetries === undefined || config.maxRetries >= 0)) {
      throw new Error("maxRetries must be >= 0");
    }
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.timeoutSeconds = config.timeoutSeconds ?? 10;
    this.maxRetries = config.maxRetries ?? 3;
    this.backoffBaseSeconds = config.backoffBaseSeconds ?? 0.2;
  }

  /** Liveness probe: engine version plus the number of loaded bundles. */
  async health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("GET", "/health");
  }

  /** Read-only echo of the active engine config and its content hash. */
  async config(): Promise<ConfigResponse> {
    return this.request<ConfigResponse>("GET", "/config");
  }

  /**
   * Score a group of candidate layouts against one bundle, optionally with
   * group-normalized advantages. Numbers arrive exactly as the service
   * serialized them; the client performs no reinterpretation.
   */
  async scoreBatch(options: ScoreBatchOptions): Promise<ScoreResponse> {
    if ((options.bundleId === undefined) === (options.bundle === undefined)) {
      throw new Error("provide exactly one of bundleId or bundle");
    }
    if (options.candidates.length === 0) {
      throw new Error("candidates must be non-empty");
    }
    const body = {
      request_id: options.requestId ?? "",
      bundle_id: options.bundleId ?? null,
      bundle: options.bundle ?? null,
      candidates: options.candidates,
      with_advantages: options.withAdvantages ?? false,
      config_overrides: options.configOverrides ?? null,
    };
    return this.request<ScoreResponse>("POST", "/score", JSON.stringify(body));
  }

  private async request<T>(method: string, path: string, body?: string): Promise<T> {
    const url = `${this.baseUrl}${path}`;
    let lastFailure: unknown;
    for (let attempt = 0; attempt <= this.maxRetries; attempt++) {
      if (attempt > 0) {
        await sleep(this.backoffBaseSeconds * 2 ** (attempt - 1));
      }
      let response: Response;
      try {
        response = await fetch(url, {
          method,
          headers: body === undefined ? undefined : { "content-type": "application/json" },
          body,
          signal: AbortSignal.timeout(this.timeoutSeconds * 1000),
        });
      } catch (failure) {
        lastFailure = failure;
        continue; // transport failure: retry
      }
      const text = await response.text();
      if (!response.ok) {
        throw this.serviceError(response.status, text);
      }
      return JSON.parse(text) as T;
    }
    throw new TransportError(`could not reach ${url}`, this.maxRetries + 1, lastFailure);
  }

  private serviceError(status: number, text: string): ServiceError {
    try {
      const parsed = JSON.parse(text) as { error?: string; detail?: unknown };
      return new ServiceError(
        status,
        parsed.error ?? "error",
        typeof parsed.detail === "string" ? parsed.detail : JSON.stringify(parsed.detail ?? text),
      );
    } catch {
      return new ServiceError(status, "error", text);
    }
  }
}
