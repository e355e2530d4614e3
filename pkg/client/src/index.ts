export { RewardClient, ServiceError, TransportError } from "./client.js";
export type {
  AdvantageVector,
  Breakdown,
  BundlePayload,
  ClientConfig,
  ConfigResponse,
  HealthResponse,
  ScoreBatchOptions,
  ScoreResponse,
} from "./types.js";
