/**
 * Thin, stateless HTTP client for the gateway. Every operator action maps to
 * exactly one endpoint call; responses are returned verbatim so the store is
 * the only place state lives.
 */
import type {
  PlanDoc,
  ProjectionDoc,
  RecommendationDoc,
  ReplayDoc,
  StatusDoc,
  TicketDoc,
  Verdict,
} from './types.js';

export type FetchLike = (
  url: string,
  init?: { method?: string; body?: string; headers?: Record<string, string> },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class GatewayError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, method = 'GET', body?: unknown): Promise<T> {
    const init: Parameters<FetchLike>[1] = { method };
    if (body !== undefined) {
      init.body = typeof body === 'string' ? body : JSON.stringify(body);
      init.headers = { 'Content-Type': 'application/json' };
    }
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const doc = (await res.json()) as Record<string, unknown> & T;
    if (!res.ok) {
      throw new GatewayError(res.status, String(doc['error'] ?? res.status));
    }
    return doc;
  }

  status(): Promise<StatusDoc> {
    return this.request('/status');
  }

  recommendations(k = 3): Promise<RecommendationDoc> {
    return this.request(`/recommendations?k=${k}`);
  }

  ingestDetection(line: string): Promise<{ record_id: number; event_id: string }> {
    return this.request('/ingest/detection', 'POST', line);
  }

  submitPlan(planId: string): Promise<TicketDoc> {
    return this.request(`/plans/${encodeURIComponent(planId)}/submit`, 'POST');
  }

  decide(
    ticketId: string,
    verdict: Verdict,
    approverId: string,
    modifiedPlan?: PlanDoc,
  ): Promise<TicketDoc> {
    return this.request(`/tickets/${encodeURIComponent(ticketId)}/decision`, 'POST', {
      approver_id: approverId,
      verdict,
      ...(modifiedPlan ? { modified_plan: modifiedPlan } : {}),
    });
  }

  dispatch(
    ticketId: string,
    opts: { droneStart?: [number, number, number]; voxel?: number } = {},
  ): Promise<TicketDoc> {
    return this.request(`/tickets/${encodeURIComponent(ticketId)}/dispatch`, 'POST', {
      ...(opts.droneStart ? { drone_start: opts.droneStart } : {}),
      ...(opts.voxel ? { voxel: opts.voxel } : {}),
    });
  }

  reportOutcome(ticketId: string, success: boolean, note = ''): Promise<TicketDoc> {
    return this.request(`/tickets/${encodeURIComponent(ticketId)}/outcome`, 'POST', {
      success,
      note,
    });
  }

  replay(recordId: number): Promise<ReplayDoc> {
    return this.request(`/replay/${recordId}`);
  }

  projection(horizonS: number): Promise<ProjectionDoc> {
    return this.request(`/projection?horizon_s=${horizonS}`);
  }
}
