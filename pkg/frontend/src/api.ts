// Typed client for the gateway's v1 endpoints.

export interface TicketSummary {
  ticket_id: string;
  permission: string;
  package_id: string;
  snapshot_id: string | null;
  highlighted_widget: string | null;
  entry_event: string;
  created_at: number;
}

export interface WidgetFlags {
  is_password: boolean;
  is_clickable: boolean;
  is_long_clickable: boolean;
  is_checkable: boolean;
  is_scrollable: boolean;
}

export interface SnapshotWidget {
  widget_id: string;
  class_name: string;
  resolved_text: string;
  cell: number;
  size_fraction: number;
  flags: WidgetFlags;
  owner_package: string;
  bounds: [number, number, number, number];
}

export interface Snapshot {
  snapshot_id: string;
  package_id: string;
  activity_id: string;
  screen_size: [number, number];
  widgets: SnapshotWidget[];
}

export interface DecisionResponse {
  record: {
    request_id: string;
    permission: string;
    package_id: string;
    verdict: string;
    decision_source: string;
    p_legal: number;
  };
  post_p_legal: number;
}

export interface ModelStats {
  models: Record<string, { algo: string; examples_seen: number; thresholds: number[] }>;
  verdicts: Record<string, number>;
  pending: number;
  resolved: number;
}

export interface TraceResponse {
  record_ids: string[];
  ticket_ids: string[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      const message = typeof payload.error === "string" ? payload.error : response.statusText;
      throw new ApiError(response.status, message);
    }
    return payload as T;
  }

  async getPending(): Promise<TicketSummary[]> {
    const body = await this.request<{ tickets: TicketSummary[] }>("GET", "/v1/pending");
    return body.tickets;
  }

  getSnapshot(snapshotId: string): Promise<Snapshot> {
    return this.request<Snapshot>("GET", `/v1/snapshots/${snapshotId}`);
  }

  submitDecision(ticketId: string, allow: boolean): Promise<DecisionResponse> {
    return this.request<DecisionResponse>("POST", "/v1/decisions", {
      ticket_id: ticketId,
      allow,
    });
  }

  getStats(): Promise<ModelStats> {
    return this.request<ModelStats>("GET", "/v1/models/stats");
  }

  postTrace(events: unknown[]): Promise<TraceResponse> {
    return this.request<TraceResponse>("POST", "/v1/traces", { events });
  }
}
