/** Severity and threat-level color coding: red/orange/green for high/medium/low. */

export const SEVERITY_COLORS = ['#2e9e44', '#f08c00', '#d62828'] as const;

/** Alert level 0..2 to display color; out-of-range clamps. */
export function severityColor(level: number): string {
  const i = Math.max(0, Math.min(SEVERITY_COLORS.length - 1, Math.floor(level)));
  return SEVERITY_COLORS[i];
}

const THREAT_LEVELS: Record<string, number> = {
  'probable fire': 2,
  'fire hazard': 1,
};

/** Detector threat string to display color; unknown strings render medium. */
export function threatColor(threatLevel: string): string {
  return severityColor(THREAT_LEVELS[threatLevel] ?? 1);
}
