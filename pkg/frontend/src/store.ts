/**
 * Server-authoritative state store.
 *
 * Stream events are applied strictly in sequence order; a gap means events
 * were missed (buffer overflow or reconnect), so the store stops applying
 * events and asks for a full /status resync. Optimistic updates are
 * forbidden: every field here is the last document the server sent.
 */
import type {
  FireEventDoc,
  RecommendationDoc,
  ReplayDoc,
  StatusDoc,
  StreamEvent,
  TicketDoc,
} from './types.js';

export interface ReplayMarker {
  sourceRecordId: number;
  event: FireEventDoc;
  /** Simulated-time deadline after which the marker disappears. */
  expiresAtSim: number;
}

export interface ConsoleState {
  simTime: number;
  burningArea: number;
  alertLevel: number;
  fireEvents: FireEventDoc[];
  tickets: Map<string, TicketDoc>;
  recommendations: RecommendationDoc | null;
  replayMarkers: ReplayMarker[];
  status: StatusDoc | null;
}

export class ConsoleStore {
  private lastSeq = 0;
  private desynced = false;
  readonly state: ConsoleState = {
    simTime: 0,
    burningArea: 0,
    alertLevel: 0,
    fireEvents: [],
    tickets: new Map(),
    recommendations: null,
    replayMarkers: [],
    status: null,
  };

  constructor(private readonly onGap: () => void = () => {}) {}

  get needsResync(): boolean {
    return this.desynced;
  }

  get seq(): number {
    return this.lastSeq;
  }

  /** Replace all derived state from a fresh /status document. */
  resync(status: StatusDoc, atSeq: number): void {
    this.state.status = status;
    this.state.simTime = status.sim_time;
    this.state.burningArea = status.burning_area;
    this.state.alertLevel = status.alert_level;
    this.state.fireEvents = [...status.fire_events];
    this.state.tickets = new Map(status.tickets.map((t) => [t.id, t]));
    this.lastSeq = atSeq;
    this.desynced = false;
    this.pruneReplayMarkers();
  }

  /** Register a replay fetched via GET /replay/{id}. */
  addReplay(doc: ReplayDoc): void {
    this.state.replayMarkers.push({
      sourceRecordId: doc.source_record_id,
      event: doc.fire_event,
      expiresAtSim: this.state.simTime + doc.lifetime,
    });
  }

  private pruneReplayMarkers(): void {
    this.state.replayMarkers = this.state.replayMarkers.filter(
      (m) => m.expiresAtSim > this.state.simTime,
    );
  }

  /**
   * Apply one stream event. Returns true when applied; false when the store
   * is desynced (events are dropped until resync()).
   */
  apply(event: StreamEvent): boolean {
    if (this.desynced) return false;
    if (event.seq <= this.lastSeq) return false; // duplicate or stale
    if (event.seq !== this.lastSeq + 1 && this.lastSeq !== 0) {
      this.desynced = true;
      this.onGap();
      return false;
    }
    this.lastSeq = event.seq;
    switch (event.kind) {
      case 'fire_event': {
        const doc = event.payload as unknown as FireEventDoc;
        this.state.fireEvents = this.state.fireEvents
          .filter((e) => e.id !== doc.id)
          .concat(doc);
        break;
      }
      case 'spread_tick': {
        this.state.simTime = event.payload['sim_time'] as number;
        this.state.burningArea = event.payload['burning_area'] as number;
        this.pruneReplayMarkers();
        break;
      }
      case 'ticket_transition': {
        const doc = event.payload as unknown as TicketDoc;
        this.state.tickets.set(doc.id, doc);
        break;
      }
      case 'recommendation': {
        this.state.recommendations = event.payload as unknown as RecommendationDoc;
        break;
      }
      case 'replay': {
        const payload = event.payload as unknown as {
          source_record_id: number;
          fire_event: FireEventDoc;
          lifetime: number;
        };
        this.addReplay(payload);
        break;
      }
      case 'detection':
        break; // raw log line; the fire_event that follows carries the truth
    }
    return true;
  }
}
