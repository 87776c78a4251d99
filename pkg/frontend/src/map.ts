/**
 * Top-down 2D map rendered as an SVG string: floor plan outline, fire
 * markers colored by threat level, resource markers, replay markers and
 * drone routes. Fire z-coordinates are shown as labels (no 3D rendering).
 */
import { threatColor } from './colors.js';
import type { ReplayMarker } from './store.js';
import type { FireEventDoc, ResourceDoc, RouteDoc } from './types.js';

export interface FloorPlan {
  width: number; // metres, x extent
  depth: number; // metres, y extent
}

export interface MapModel {
  plan: FloorPlan;
  fires: FireEventDoc[];
  resources: ResourceDoc[];
  replayMarkers: ReplayMarker[];
  routes: RouteDoc[];
}

const SCALE = 24; // px per metre
const esc = (s: string) => s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/"/g, '&quot;');

export function renderMap(model: MapModel): string {
  const w = model.plan.width * SCALE;
  const h = model.plan.depth * SCALE;
  const px = (x: number) => (x * SCALE).toFixed(1);
  // svg y grows downward; world y grows "north"
  const py = (y: number) => ((model.plan.depth - y) * SCALE).toFixed(1);

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${w} ${h}" width="${w}" height="${h}">`,
    `<rect class="floor" x="0" y="0" width="${w}" height="${h}"/>`,
  ];
  for (const route of model.routes) {
    const points = route.waypoints.map(([x, y]) => `${px(x)},${py(y)}`).join(' ');
    parts.push(`<polyline class="route" fill="none" points="${points}"/>`);
  }
  for (const r of model.resources) {
    if (!r.position) continue;
    const [x, y] = r.position;
    parts.push(
      `<rect class="resource" data-kind="${esc(r.kind)}" x="${px(x)}" y="${py(y)}" width="8" height="8"/>`,
    );
  }
  for (const m of model.replayMarkers) {
    const [x, y] = m.event.position;
    parts.push(
      `<circle class="replay" data-record="${m.sourceRecordId}" cx="${px(x)}" cy="${py(y)}" r="10"/>`,
    );
  }
  for (const f of model.fires) {
    const [x, y, z] = f.position;
    parts.push(
      `<circle class="fire" data-id="${esc(f.id)}" cx="${px(x)}" cy="${py(y)}" r="7" fill="${threatColor(f.threat_level)}"/>`,
      `<text class="fire-z" x="${px(x)}" y="${py(y)}">z=${z.toFixed(1)}</text>`,
    );
  }
  parts.push('</svg>');
  return parts.join('\n');
}
