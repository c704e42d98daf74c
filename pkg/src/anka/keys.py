"""Ed25519 key pairs, address derivation and local keystore files.

An address is the last 20 bytes of SHA-256 over the raw 32-byte public key,
rendered as 0x-prefixed lowercase hex. Signing is client-side only; the node
never sees private keys.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

ADDRESS_BYTES = 20
PUBLIC_KEY_BYTES = 32
SIGNATURE_BYTES = 64

_KEYGEN_DOMAIN = b"anka-keygen-v1:"


def address_from_public_key(public_key: bytes) -> str:
    if len(public_key) != PUBLIC_KEY_BYTES:
        raise ValueError(f"public key must be {PUBLIC_KEY_BYTES} bytes")
    digest = hashlib.sha256(public_key).digest()
    return "0x" + digest[-ADDRESS_BYTES:].hex()


def address_to_bytes(address: str) -> bytes:
    if not is_address(address):
        raise ValueError(f"not a valid address: {address!r}")
    return bytes.fromhex(address[2:])


def address_from_bytes(raw: bytes) -> str:
    if len(raw) != ADDRESS_BYTES:
        raise ValueError(f"address must be {ADDRESS_BYTES} bytes")
    return "0x" + raw.hex()


def is_address(value: object) -> bool:
    if not isinstance(value, str) or len(value) != 2 + 2 * ADDRESS_BYTES:
        return False
    if not value.startswith("0x"):
        return False
    body = value[2:]
    return body == body.lower() and all(c in "0123456789abcdef" for c in body)


@dataclass(frozen=True)
class KeyPair:
    """Raw Ed25519 key material plus the derived account address."""

    private_key: bytes
    public_key: bytes

    @property
    def address(self) -> str:
        return address_from_public_key(self.public_key)

    def sign(self, message: bytes) -> bytes:
        sk = Ed25519PrivateKey.from_private_bytes(self.private_key)
        return sk.sign(message)


def generate_keypair(seed: int | bytes | None = None) -> KeyPair:
    """Create a key pair; a given seed always yields the same pair.

    Seeded generation exists for reproducible tests and scripted scenarios;
    unseeded generation uses the OS RNG.
    """
    if seed is None:
        private = os.urandom(32)
    else:
        if isinstance(seed, int):
            seed = seed.to_bytes((max(seed.bit_length(), 1) + 7) // 8, "big", signed=False)
        private = hashlib.sha256(_KEYGEN_DOMAIN + seed).digest()
    sk = Ed25519PrivateKey.from_private_bytes(private)
    public = sk.public_key().public_bytes_raw()
    return KeyPair(private_key=private, public_key=public)


def verify_signature(public_key: bytes, message: bytes, signature: bytes) -> bool:
    if len(public_key) != PUBLIC_KEY_BYTES or len(signature) != SIGNATURE_BYTES:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except InvalidSignature:
        return False


def save_keystore(path: str | Path, keypair: KeyPair) -> None:
    """Write a plaintext JSON keystore (this is a test system, keys are not encrypted)."""
    record = {
        "address": keypair.address,
        "public_key_hex": keypair.public_key.hex(),
        "private_key_hex": keypair.private_key.hex(),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2) + "\n")


def load_keystore(path: str | Path) -> KeyPair:
    record = json.loads(Path(path).read_text())
    keypair = KeyPair(
        private_key=bytes.fromhex(record["private_key_hex"]),
        public_key=bytes.fromhex(record["public_key_hex"]),
    )
    if keypair.address != record["address"]:
        raise ValueError(f"keystore address mismatch in {path}")
    return keypair
