/**
 * Arrival-time isochrone bands for the what-if projection overlay.
 *
 * The projection endpoint returns arrival times per patch id; the console
 * bins them into equal-width time bands and renders a band legend plus
 * per-band counts. Values pass through unchanged from the endpoint.
 */
import type { ProjectionDoc } from './types.js';

export interface IsochroneBand {
  /** Band interval [from, to) in seconds of simulated time. */
  from: number;
  to: number;
  patchIds: string[];
}

export function isochroneBands(doc: ProjectionDoc, bandCount = 5): IsochroneBand[] {
  const entries = Object.entries(doc.arrival_map);
  if (entries.length === 0 || bandCount < 1) return [];
  const times = entries.map(([, t]) => t);
  const lo = Math.min(...times);
  const hi = Math.max(...times);
  const width = hi > lo ? (hi - lo) / bandCount : 1;
  const bands: IsochroneBand[] = Array.from({ length: bandCount }, (_, i) => ({
    from: lo + i * width,
    to: lo + (i + 1) * width,
    patchIds: [],
  }));
  for (const [pid, t] of entries) {
    const i = Math.min(bandCount - 1, Math.floor((t - lo) / width));
    bands[i].patchIds.push(pid);
  }
  return bands;
}
