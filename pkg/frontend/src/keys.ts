// Key handling: Ed25519 signing, address derivation, keystore import.
// Private keys live only in page memory; nothing here persists or transmits them.

import { getPublicKeyAsync, signAsync } from "@noble/ed25519";
import { bytesToHex, hexToBytes, sha256 } from "./codec";

export interface Keystore {
  address: string;
  public_key_hex: string;
  private_key_hex: string;
  created_at: string;
}

export interface Keypair {
  address: string;
  publicKey: Uint8Array;
  privateKey: Uint8Array;
}

/** Address is the last 20 bytes of sha256 over the raw 32-byte public key. */
export async function deriveAddress(publicKey: Uint8Array): Promise<string> {
  const digest = await sha256(publicKey);
  return "0x" + bytesToHex(digest.slice(12));
}

export async function keypairFromPrivate(privateKey: Uint8Array): Promise<Keypair> {
  if (privateKey.length !== 32) throw new Error("private key must be 32 bytes");
  const publicKey = await getPublicKeyAsync(privateKey);
  return { address: await deriveAddress(publicKey), publicKey, privateKey };
}

export async function generateKeypair(): Promise<Keypair> {
  const privateKey = crypto.getRandomValues(new Uint8Array(32));
  return keypairFromPrivate(privateKey);
}

/**
 * Parse a keystore JSON string as written by the wallet CLI. Verifies that
 * the public key matches the private key and the address matches the public
 * key, so a corrupted or mixed-up file fails loudly at import time.
 */
export async function importKeystore(text: string): Promise<Keypair> {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch {
    throw new Error("keystore is not valid JSON");
  }
  if (typeof parsed !== "object" || parsed === null) {
    throw new Error("keystore must be a JSON object");
  }
  const ks = parsed as Partial<Keystore>;
  if (typeof ks.private_key_hex !== "string") {
    throw new Error("keystore missing private_key_hex");
  }
  const pair = await keypairFromPrivate(hexToBytes(ks.private_key_hex));
  if (typeof ks.public_key_hex === "string" && ks.public_key_hex.toLowerCase() !== bytesToHex(pair.publicKey)) {
    throw new Error("keystore public key does not match private key");
  }
  if (typeof ks.address === "string" && ks.address.toLowerCase() !== pair.address) {
    throw new Error("keystore address does not match public key");
  }
  return pair;
}

export function exportKeystore(pair: Keypair): Keystore {
  return {
    address: pair.address,
    public_key_hex: bytesToHex(pair.publicKey),
    private_key_hex: bytesToHex(pair.privateKey),
    created_at: new Date().toISOString(),
  };
}

export async function sign(pair: Keypair, message: Uint8Array): Promise<Uint8Array> {
  return signAsync(message, pair.privateKey);
}
