// Haversine distance, mirroring the node's scalar implementation so the
// distance column agrees with on-chain geo queries. Pinned against the
// shared test vectors exported by the node's test suite.

export const EARTH_RADIUS_M = 6_371_000.0;

export interface GeoPointMicro {
  lat_micro: number;
  lon_micro: number;
}

const DEG = Math.PI / 180.0;

export function haversineMeters(a: GeoPointMicro, b: GeoPointMicro): number {
  const aLat = a.lat_micro / 1e6;
  const aLon = a.lon_micro / 1e6;
  const bLat = b.lat_micro / 1e6;
  const bLon = b.lon_micro / 1e6;
  const lat1 = aLat * DEG;
  const lat2 = bLat * DEG;
  const dlat = (bLat - aLat) * DEG;
  const dlon = (bLon - aLon) * DEG;
  const h =
    Math.sin(dlat / 2.0) ** 2 + Math.cos(lat1) * Math.cos(lat2) * Math.sin(dlon / 2.0) ** 2;
  return EARTH_RADIUS_M * 2.0 * Math.asin(Math.sqrt(h));
}

/** "139.2 m" under a kilometre, otherwise "1.234 km"; keeps the shown value
 * within 0.1% of the true distance. */
export function formatDistance(meters: number): string {
  if (meters < 1000) return `${meters.toFixed(1)} m`;
  return `${(meters / 1000).toFixed(3)} km`;
}

/** Uppercase, strip whitespace, enforce 3..10 alphanumerics; matches the node. */
export function normalizePostal(raw: string): string {
  const code = raw.replace(/\s+/g, "").toUpperCase();
  if (code.length < 3) throw new Error("postal code too short");
  if (code.length > 10) throw new Error("postal code longer than 10 chars");
  if (!/^[0-9A-Z]+$/.test(code)) throw new Error("postal code must be alphanumeric");
  return code;
}

export function parseMicroDegrees(text: string, kind: "lat" | "lon"): number {
  const value = Number(text.trim());
  if (!Number.isFinite(value)) throw new Error(`${kind} must be a number`);
  const bound = kind === "lat" ? 90 : 180;
  if (value < -bound || value > bound) throw new Error(`${kind} out of range [-${bound}, ${bound}]`);
  return Math.round(value * 1e6);
}
