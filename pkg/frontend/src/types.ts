/**
 * Gateway document types. These mirror the JSON bodies served by the engine;
 * the console renders them verbatim and never invents client-side truth.
 */

export type Vec3 = [number, number, number];

export interface FireEventDoc {
  id: string;
  position: Vec3;
  surface_id: string;
  threat_level: string;
  peak_temp: number;
  pixel_count: number;
  timestamp: string;
  sensor_id: string;
}

export interface ActionDoc {
  kind: string;
  target: Vec3 | string;
  quantity: number;
}

export interface PlanDoc {
  id: string;
  actions: ActionDoc[];
  effectiveness: number;
  cost_efficiency: number;
  response_speed: number;
}

export interface RouteDoc {
  waypoints: Vec3[];
  total_length: number;
  clearance: number;
}

export type TicketStateName =
  | 'PendingApproval'
  | 'Approved'
  | 'Rejected'
  | 'Dispatched'
  | 'Executed'
  | 'Failed';

export interface DecisionDoc {
  approver_id: string;
  verdict: string;
  timestamp: string;
}

export interface TicketDoc {
  id: string;
  state: TicketStateName;
  scenario_id: string;
  plan: PlanDoc;
  decisions: DecisionDoc[];
  routes: RouteDoc[];
  outcome: { success: boolean; note: string } | null;
}

export interface ResourceDoc {
  kind: string;
  count: number;
  position: Vec3 | null;
  available: boolean;
}

export interface EnvDoc {
  air_temp: number;
  humidity: number;
  wind_speed: number;
  wind_direction: number;
}

export interface StatusDoc {
  fire_events: FireEventDoc[];
  sim_time: number;
  burning_area: number;
  env: EnvDoc;
  resources: ResourceDoc[];
  alert_level: number;
  tickets: TicketDoc[];
}

export interface MatchDoc {
  scenario_id: string;
  static_distance: number;
  temporal_distance: number;
  combined: number;
}

export interface RecommendationDoc {
  reason?: string;
  matches: MatchDoc[];
  plans: { plan: PlanDoc; score: number; scenario_id: string }[];
}

export interface ReplayDoc {
  source_record_id: number;
  fire_event: FireEventDoc;
  lifetime: number;
}

export interface ProjectionDoc {
  sim_time: number;
  arrival_map: Record<string, number>;
  burning_area: number;
}

/** Envelope for every /stream message. */
export interface StreamEvent {
  seq: number;
  kind:
    | 'detection'
    | 'fire_event'
    | 'spread_tick'
    | 'ticket_transition'
    | 'recommendation'
    | 'replay';
  payload: Record<string, unknown>;
  timestamp: string;
}

export type Verdict = 'approve' | 'reject' | 'modify';
