// Canonical binary transaction encoding. Mirrors docs/protocol.md and is
// pinned byte-for-byte against tests/fixtures/shared_vectors.json.
//
//   sign_body = sender(20) | nonce u64 | gas_limit u64 | gas_price u64
//             | kind u8 | payload body
//   wire      = sign_body | public_key(32) | signature(64)
//
// Integers are big-endian; lat/lon are signed i64 microdegrees; dates are
// u32 days since 1970-01-01.

export const ADDRESS_BYTES = 20;
export const PUBLIC_KEY_BYTES = 32;
export const SIGNATURE_BYTES = 64;

export const KIND = {
  deploy: 0,
  register: 1,
  list_offer: 2,
  buy_offer: 3,
  cancel_offer: 4,
  transfer: 5,
} as const;

export type Payload =
  | { kind: "deploy" }
  | { kind: "register"; name: string }
  | {
      kind: "list_offer";
      energy_wh: number;
      voltage: number;
      price: number;
      postal_code: string;
      lat_micro: number;
      lon_micro: number;
      offer_date: string; // YYYY-MM-DD
    }
  | { kind: "buy_offer"; offer_id: number }
  | { kind: "cancel_offer"; offer_id: number }
  | { kind: "transfer"; to: string; amount: number };

export interface TxFields {
  sender: string;
  nonce: number;
  gasLimit: number;
  gasPrice: number;
  payload: Payload;
}

export function hexToBytes(hex: string): Uint8Array {
  const clean = hex.startsWith("0x") || hex.startsWith("0X") ? hex.slice(2) : hex;
  if (clean.length % 2 !== 0 || /[^0-9a-fA-F]/.test(clean)) {
    throw new Error(`not hex: ${hex}`);
  }
  const out = new Uint8Array(clean.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(clean.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

export function bytesToHex(bytes: Uint8Array): string {
  let out = "";
  for (const b of bytes) out += b.toString(16).padStart(2, "0");
  return out;
}

export function concatBytes(...parts: Uint8Array[]): Uint8Array {
  const out = new Uint8Array(parts.reduce((n, p) => n + p.length, 0));
  let at = 0;
  for (const p of parts) {
    out.set(p, at);
    at += p.length;
  }
  return out;
}

function u64(value: number | bigint): Uint8Array {
  const v = BigInt(value);
  if (v < 0n || v > 0xffffffffffffffffn) throw new Error(`u64 out of range: ${value}`);
  const out = new Uint8Array(8);
  new DataView(out.buffer).setBigUint64(0, v, false);
  return out;
}

function u32(value: number): Uint8Array {
  if (!Number.isInteger(value) || value < 0 || value > 0xffffffff) {
    throw new Error(`u32 out of range: ${value}`);
  }
  const out = new Uint8Array(4);
  new DataView(out.buffer).setUint32(0, value, false);
  return out;
}

function i64(value: number | bigint): Uint8Array {
  const out = new Uint8Array(8);
  new DataView(out.buffer).setBigInt64(0, BigInt(value), false);
  return out;
}

function bytesField(raw: Uint8Array): Uint8Array {
  return concatBytes(u32(raw.length), raw);
}

export function addressToBytes(address: string): Uint8Array {
  const raw = hexToBytes(address);
  if (raw.length !== ADDRESS_BYTES) throw new Error(`bad address length: ${address}`);
  return raw;
}

/** Days since 1970-01-01 for an ISO YYYY-MM-DD date. */
export function dateToDays(iso: string): number {
  const m = /^(\d{4})-(\d{2})-(\d{2})$/.exec(iso);
  if (!m) throw new Error(`bad date: ${iso}`);
  const ms = Date.UTC(Number(m[1]), Number(m[2]) - 1, Number(m[3]));
  const days = ms / 86_400_000;
  if (!Number.isInteger(days) || days < 0) throw new Error(`date not encodable: ${iso}`);
  return days;
}

export function daysToDate(days: number): string {
  return new Date(days * 86_400_000).toISOString().slice(0, 10);
}

export function encodePayload(payload: Payload): Uint8Array {
  switch (payload.kind) {
    case "deploy":
      return new Uint8Array(0);
    case "register":
      return bytesField(new TextEncoder().encode(payload.name));
    case "list_offer":
      return concatBytes(
        u64(payload.energy_wh),
        u32(payload.voltage),
        u64(payload.price),
        bytesField(new TextEncoder().encode(payload.postal_code)),
        i64(payload.lat_micro),
        i64(payload.lon_micro),
        u32(dateToDays(payload.offer_date)),
      );
    case "buy_offer":
      return u64(payload.offer_id);
    case "cancel_offer":
      return u64(payload.offer_id);
    case "transfer":
      return concatBytes(addressToBytes(payload.to), u64(payload.amount));
  }
}

export function signingBytes(tx: TxFields): Uint8Array {
  return concatBytes(
    addressToBytes(tx.sender),
    u64(tx.nonce),
    u64(tx.gasLimit),
    u64(tx.gasPrice),
    new Uint8Array([KIND[tx.payload.kind]]),
    encodePayload(tx.payload),
  );
}

export function encodeTx(tx: TxFields, publicKey: Uint8Array, signature: Uint8Array): Uint8Array {
  if (publicKey.length !== PUBLIC_KEY_BYTES) throw new Error("bad public key length");
  if (signature.length !== SIGNATURE_BYTES) throw new Error("bad signature length");
  return concatBytes(signingBytes(tx), publicKey, signature);
}

export async function sha256(data: Uint8Array): Promise<Uint8Array> {
  // Copy into a plain ArrayBuffer so SharedArrayBuffer-backed views are rejected by construction.
  const buf = new Uint8Array(data).buffer;
  return new Uint8Array(await crypto.subtle.digest("SHA-256", buf));
}

export async function txHash(wire: Uint8Array): Promise<string> {
  return "0x" + bytesToHex(await sha256(wire));
}

// Suggested gas limits per operation; generous headroom over the metered cost.
export const GAS_LIMITS: Record<Payload["kind"], number> = {
  deploy: 4_000_000,
  register: 100_000,
  list_offer: 700_000,
  buy_offer: 150_000,
  cancel_offer: 100_000,
  transfer: 50_000,
};
