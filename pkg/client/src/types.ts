/** Wire types for the stagescore batch reward service. */

export interface ClientConfig {
  /** Base address of the service, e.g. "http://127.0.0.1:8970". */
  baseUrl: string;
  /** Per-request timeout in seconds. */
  timeoutSeconds?: number;
  /** Retries after the first attempt, transport failures only. */
  maxRetries?: number;
  /** Base of the exponential backoff between attempts, in seconds. */
  backoffBaseSeconds?: number;
}

export interface BundlePayload {
  bundle_id: string;
  passage: string;
  quote_ids: string[];
  canonical_names: string[];
  alias_map?: Record<string, string>;
  reference_speakers?: Record<string, string>;
}

export interface ScoreBatchOptions {
  requestId?: string;
  bundleId?: string;
  bundle?: BundlePayload;
  candidates: string[];
  withAdvantages?: boolean;
  configOverrides?: Record<string, unknown>;
}

export interface Breakdown {
  candidate_index: number;
  r: number;
  components: Record<string, number>;
  valid: boolean;
  failure_kind: string | null;
}

export interface AdvantageVector {
  rewards: number[];
  advantages: number[];
  epsilon: number;
}

export interface ScoreResponse {
  request_id: string;
  bundle_id: string;
  breakdowns: Breakdown[];
  advantages: AdvantageVector | null;
  config_id: string;
  engine_version: string;
}

export interface HealthResponse {
  status: string;
  engine_version: string;
  bundle_count: number;
}

export interface ConfigResponse {
  config: Record<string, unknown>;
  config_id: string;
}
