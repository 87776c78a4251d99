/**
 * Console entry point: wires the gateway client, stream and store to the DOM.
 * All rendering reads from the store; operator buttons call exactly one
 * endpoint each and wait for the server echo (no optimistic updates).
 */
import { GatewayClient } from './client.js';
import { severityColor } from './colors.js';
import { isochroneBands } from './isochrones.js';
import { renderMap, type FloorPlan } from './map.js';
import { ConsoleStore } from './store.js';
import { connectStream } from './stream.js';
import type { StatusDoc, TicketDoc } from './types.js';

export interface AppConfig {
  baseUrl: string;
  streamUrl: string;
  plan: FloorPlan;
}

function ticketCard(t: TicketDoc): string {
  const scores = t.plan;
  return `
    <div class="ticket" data-id="${t.id}" data-state="${t.state}">
      <header>${t.id} — <span class="state">${t.state}</span></header>
      <p>plan ${scores.id} (eff ${scores.effectiveness.toFixed(2)},
         cost ${scores.cost_efficiency.toFixed(2)},
         speed ${scores.response_speed.toFixed(2)})</p>
      <div class="actions">
        <button data-act="approve">Approve</button>
        <button data-act="reject">Reject</button>
        <button data-act="dispatch">Dispatch</button>
      </div>
    </div>`;
}

export function startApp(config: AppConfig): void {
  const client = new GatewayClient(config.baseUrl);
  const store = new ConsoleStore(() => {
    void resync();
  });

  async function resync(): Promise<void> {
    const status: StatusDoc = await client.status();
    store.resync(status, store.seq);
    render();
  }

  function render(): void {
    const s = store.state;
    const mapEl = document.getElementById('map')!;
    mapEl.innerHTML = renderMap({
      plan: config.plan,
      fires: s.fireEvents,
      resources: s.status?.resources ?? [],
      replayMarkers: s.replayMarkers,
      routes: [...s.tickets.values()].flatMap((t) => t.routes),
    });
    const alertEl = document.getElementById('alert')!;
    alertEl.textContent = `alert level ${s.alertLevel}`;
    alertEl.style.background = severityColor(s.alertLevel);
    document.getElementById('clock')!.textContent =
      `t=${s.simTime.toFixed(1)} s, burning ${s.burningArea.toFixed(1)} m²`;
    document.getElementById('tickets')!.innerHTML = [...s.tickets.values()]
      .map(ticketCard)
      .join('');
    const rec = s.recommendations;
    document.getElementById('recommendations')!.innerHTML = (rec?.plans ?? [])
      .map(
        (p) => `
        <div class="plan-card" data-plan="${p.plan.id}">
          <strong>${p.plan.id}</strong> score ${p.score.toFixed(3)}
          <button data-act="submit">Submit</button>
        </div>`,
      )
      .join('');
  }

  document.addEventListener('click', (ev) => {
    const button = (ev.target as HTMLElement).closest('button');
    if (!button) return;
    const act = button.dataset['act'];
    const ticket = button.closest<HTMLElement>('.ticket');
    const planCard = button.closest<HTMLElement>('.plan-card');
    const done = () => render();
    if (act === 'submit' && planCard) {
      void client.submitPlan(planCard.dataset['plan']!).then(done);
    } else if (act === 'approve' && ticket) {
      void client.decide(ticket.dataset['id']!, 'approve', 'operator').then(done);
    } else if (act === 'reject' && ticket) {
      void client.decide(ticket.dataset['id']!, 'reject', 'operator').then(done);
    } else if (act === 'dispatch' && ticket) {
      void client.dispatch(ticket.dataset['id']!).then(done);
    }
  });

  const replayForm = document.getElementById('replay-form') as HTMLFormElement;
  replayForm.addEventListener('submit', (ev) => {
    ev.preventDefault();
    const id = Number((document.getElementById('replay-id') as HTMLInputElement).value);
    void client.replay(id).then((doc) => {
      store.addReplay(doc);
      render();
    });
  });

  const projForm = document.getElementById('projection-form') as HTMLFormElement;
  projForm.addEventListener('submit', (ev) => {
    ev.preventDefault();
    const horizon = Number(
      (document.getElementById('horizon') as HTMLInputElement).value,
    );
    void client.projection(horizon).then((doc) => {
      const bands = isochroneBands(doc);
      document.getElementById('isochrones')!.innerHTML = bands
        .map(
          (b) =>
            `<li>${b.from.toFixed(0)}–${b.to.toFixed(0)} s: ${b.patchIds.length} patches</li>`,
        )
        .join('');
    });
  });

  connectStream({
    url: config.streamUrl,
    onEvent: (event) => {
      if (store.apply(event)) render();
    },
    onDisconnect: () => void resync(),
  });
  void resync();
}
