/**
 * Typed client for the labeling-service HTTP API.
 *
 * All numbers pass through JSON untouched, so values read from responses are
 * bit-identical to what the service computed; the charts rely on that.
 */

export type SessionStatus = "awaiting_labels" | "training" | "finished";

export interface FeatureView {
  name: string;
  value: number;
  /** mid-rank of the value within the session's pool, in [0, 1] */
  percentile: number;
}

export interface BatchItem {
  id: string;
  y_hat: number;
  anomalous: boolean;
  uncertain: boolean;
  random: boolean;
  features: FeatureView[];
}

export interface BatchView {
  session: string;
  t: number;
  query_size: number;
  items: BatchItem[];
}

export interface FractionTriple {
  anomalous: number;
  uncertain: number;
  random: number;
}

export interface SessionSummary {
  id: string;
  status: SessionStatus;
  t: number;
  method: string;
  query_size: number;
  labeled_size: number;
  unlabeled_size: number;
  total_iterations: number;
  baseline_f1: number | null;
}

export interface CurrentBlock {
  t: number;
  labeled: number;
  f1: number | null;
  status: SessionStatus;
  fractions: FractionTriple;
}

/** One completed labeling round, as reported by /metrics. */
export interface IterationRow {
  t: number;
  labeled: number;
  f1: number | null;
  alpha_anomalous: number | null;
  alpha_uncertain: number | null;
  alpha_random: number | null;
  delta_anomalous: number | null;
  delta_uncertain: number | null;
  update_factor: number | null;
  n_anomalous: number | null;
  n_uncertain: number | null;
  n_dual: number | null;
  n_random: number | null;
  batch_size: number | null;
}

export interface MetricsView {
  session: string;
  method: string;
  query_size: number;
  baseline_f1: number | null;
  current: CurrentBlock;
  iterations: IterationRow[];
}

export interface SubmitResult {
  iteration: IterationRow;
  next_fractions: FractionTriple;
  current: CurrentBlock;
}

export interface SessionRequest {
  dataset: Record<string, unknown>;
  labeled0?: number;
  eval_size?: number;
  query_size?: number;
  total_queries?: number | null;
  method?: string;
  gbm?: Record<string, unknown> | null;
  dynamics?: Record<string, unknown> | null;
  seed?: number;
  sim?: number;
  k_folds?: number;
  anomaly_trees?: number;
  anomaly_subsample?: number;
}

/** Structured error decoded from the service's {error: {code, message}} envelope. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl: string = "",
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const text = await resp.text();
    let payload: unknown = null;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = null; // non-JSON body; fall through to the status check
      }
    }
    if (!resp.ok) {
      const envelope = (payload as { error?: { code?: string; message?: string } } | null)?.error;
      throw new ApiError(
        resp.status,
        envelope?.code ?? "http_error",
        envelope?.message ?? `request failed with status ${resp.status} on ${path}`,
      );
    }
    return payload as T;
  }

  createSession(cfg: SessionRequest): Promise<SessionSummary> {
    return this.request("POST", "/sessions", cfg);
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.request("GET", `/sessions/${id}`);
  }

  getBatch(id: string): Promise<BatchView> {
    return this.request("GET", `/sessions/${id}/batch`);
  }

  submitLabels(id: string, labels: Record<string, 0 | 1>): Promise<SubmitResult> {
    return this.request("POST", `/sessions/${id}/labels`, { labels });
  }

  getMetrics(id: string): Promise<MetricsView> {
    return this.request("GET", `/sessions/${id}/metrics`);
  }
}
