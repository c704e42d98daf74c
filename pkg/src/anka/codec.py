"""Canonical binary transaction encoding.

The byte layout is fixed so that identical fields always produce identical
bytes (replay and hashing stability). See docs/protocol.md for the bit-exact
layout. Summary:

    sign_body = sender(20) | nonce u64 | gas_limit u64 | gas_price u64
              | kind u8 | payload body
    wire      = sign_body | public_key(32) | signature(64)

Integers are big-endian unsigned unless noted; lat/lon are signed i64
microdegrees; dates are u32 days since 1970-01-01 (UTC). The Ed25519
signature covers sign_body.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from datetime import date, timedelta

from anka.errors import CodecError
from anka.keys import (
    ADDRESS_BYTES,
    PUBLIC_KEY_BYTES,
    SIGNATURE_BYTES,
    KeyPair,
    address_from_bytes,
    address_from_public_key,
    address_to_bytes,
    verify_signature,
)

KIND_DEPLOY = 0
KIND_REGISTER = 1
KIND_LIST_OFFER = 2
KIND_BUY_OFFER = 3
KIND_CANCEL_OFFER = 4
KIND_TRANSFER = 5

_EPOCH = date(1970, 1, 1)
U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class Deploy:
    kind = KIND_DEPLOY
    kind_name = "deploy"


@dataclass(frozen=True)
class Register:
    name: str
    kind = KIND_REGISTER
    kind_name = "register"


@dataclass(frozen=True)
class ListOffer:
    energy_wh: int
    voltage: int
    price: int
    postal_code: str
    lat_micro: int
    lon_micro: int
    offer_date: date
    kind = KIND_LIST_OFFER
    kind_name = "list_offer"


@dataclass(frozen=True)
class BuyOffer:
    offer_id: int
    kind = KIND_BUY_OFFER
    kind_name = "buy_offer"


@dataclass(frozen=True)
class CancelOffer:
    offer_id: int
    kind = KIND_CANCEL_OFFER
    kind_name = "cancel_offer"


@dataclass(frozen=True)
class Transfer:
    to: str
    amount: int
    kind = KIND_TRANSFER
    kind_name = "transfer"


Payload = Deploy | Register | ListOffer | BuyOffer | CancelOffer | Transfer


@dataclass(frozen=True)
class SignedTransaction:
    sender: str
    nonce: int
    gas_limit: int
    gas_price: int
    payload: Payload
    public_key: bytes
    signature: bytes

    @property
    def wire(self) -> bytes:
        return encode_tx(self)

    @property
    def tx_hash(self) -> str:
        return tx_hash(self.wire)


def _u64(value: int) -> bytes:
    if not 0 <= value <= U64_MAX:
        raise CodecError(f"u64 out of range: {value}")
    return struct.pack(">Q", value)


def _u32(value: int) -> bytes:
    if not 0 <= value <= 2**32 - 1:
        raise CodecError(f"u32 out of range: {value}")
    return struct.pack(">I", value)


def _i64(value: int) -> bytes:
    return struct.pack(">q", value)


def _bytes_field(raw: bytes) -> bytes:
    return _u32(len(raw)) + raw


def date_to_days(d: date) -> int:
    days = (d - _EPOCH).days
    if days < 0:
        raise CodecError(f"dates before 1970 are not encodable: {d}")
    return days


def days_to_date(days: int) -> date:
    return _EPOCH + timedelta(days=days)


def encode_payload(payload: Payload) -> bytes:
    if isinstance(payload, Deploy):
        return b""
    if isinstance(payload, Register):
        return _bytes_field(payload.name.encode("utf-8"))
    if isinstance(payload, ListOffer):
        return b"".join(
            [
                _u64(payload.energy_wh),
                _u32(payload.voltage),
                _u64(payload.price),
                _bytes_field(payload.postal_code.encode("ascii")),
                _i64(payload.lat_micro),
                _i64(payload.lon_micro),
                _u32(date_to_days(payload.offer_date)),
            ]
        )
    if isinstance(payload, BuyOffer):
        return _u64(payload.offer_id)
    if isinstance(payload, CancelOffer):
        return _u64(payload.offer_id)
    if isinstance(payload, Transfer):
        return address_to_bytes(payload.to) + _u64(payload.amount)
    raise CodecError(f"unknown payload type: {type(payload).__name__}")


def signing_bytes(
    sender: str, nonce: int, gas_limit: int, gas_price: int, payload: Payload
) -> bytes:
    return b"".join(
        [
            address_to_bytes(sender),
            _u64(nonce),
            _u64(gas_limit),
            _u64(gas_price),
            bytes([payload.kind]),
            encode_payload(payload),
        ]
    )


def make_signed_tx(
    keypair: KeyPair,
    nonce: int,
    payload: Payload,
    gas_limit: int,
    gas_price: int = 1,
) -> SignedTransaction:
    sender = keypair.address
    body = signing_bytes(sender, nonce, gas_limit, gas_price, payload)
    return SignedTransaction(
        sender=sender,
        nonce=nonce,
        gas_limit=gas_limit,
        gas_price=gas_price,
        payload=payload,
        public_key=keypair.public_key,
        signature=keypair.sign(body),
    )


def encode_tx(tx: SignedTransaction) -> bytes:
    body = signing_bytes(tx.sender, tx.nonce, tx.gas_limit, tx.gas_price, tx.payload)
    if len(tx.public_key) != PUBLIC_KEY_BYTES:
        raise CodecError("bad public key length")
    if len(tx.signature) != SIGNATURE_BYTES:
        raise CodecError("bad signature length")
    return body + tx.public_key + tx.signature


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise CodecError("truncated transaction")
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def i64(self) -> int:
        return struct.unpack(">q", self.take(8))[0]

    def bytes_field(self, max_len: int = 4096) -> bytes:
        n = self.u32()
        if n > max_len:
            raise CodecError(f"field too long: {n}")
        return self.take(n)


def _decode_payload(kind: int, r: _Reader) -> Payload:
    if kind == KIND_DEPLOY:
        return Deploy()
    if kind == KIND_REGISTER:
        try:
            name = r.bytes_field().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CodecError("register name is not valid UTF-8") from exc
        return Register(name=name)
    if kind == KIND_LIST_OFFER:
        energy_wh = r.u64()
        voltage = r.u32()
        price = r.u64()
        try:
            postal = r.bytes_field().decode("ascii")
        except UnicodeDecodeError as exc:
            raise CodecError("postal code is not ASCII") from exc
        lat_micro = r.i64()
        lon_micro = r.i64()
        offer_date = days_to_date(r.u32())
        return ListOffer(
            energy_wh=energy_wh,
            voltage=voltage,
            price=price,
            postal_code=postal,
            lat_micro=lat_micro,
            lon_micro=lon_micro,
            offer_date=offer_date,
        )
    if kind == KIND_BUY_OFFER:
        return BuyOffer(offer_id=r.u64())
    if kind == KIND_CANCEL_OFFER:
        return CancelOffer(offer_id=r.u64())
    if kind == KIND_TRANSFER:
        to = address_from_bytes(r.take(ADDRESS_BYTES))
        return Transfer(to=to, amount=r.u64())
    raise CodecError(f"unknown payload kind: {kind}")


def decode_tx(wire: bytes) -> SignedTransaction:
    """Decode wire bytes; verifies structure only, not the signature."""
    if len(wire) < ADDRESS_BYTES + 8 * 3 + 1 + PUBLIC_KEY_BYTES + SIGNATURE_BYTES:
        raise CodecError("transaction too short")
    body = wire[: -(PUBLIC_KEY_BYTES + SIGNATURE_BYTES)]
    public_key = wire[-(PUBLIC_KEY_BYTES + SIGNATURE_BYTES) : -SIGNATURE_BYTES]
    signature = wire[-SIGNATURE_BYTES:]

    r = _Reader(body)
    sender = address_from_bytes(r.take(ADDRESS_BYTES))
    nonce = r.u64()
    gas_limit = r.u64()
    gas_price = r.u64()
    kind = r.u8()
    payload = _decode_payload(kind, r)
    if r.pos != len(body):
        raise CodecError("trailing bytes after payload")
    return SignedTransaction(
        sender=sender,
        nonce=nonce,
        gas_limit=gas_limit,
        gas_price=gas_price,
        payload=payload,
        public_key=public_key,
        signature=signature,
    )


def verify_tx(tx: SignedTransaction) -> bool:
    """Signature must verify and the sender must match the embedded public key."""
    if address_from_public_key(tx.public_key) != tx.sender:
        return False
    body = signing_bytes(tx.sender, tx.nonce, tx.gas_limit, tx.gas_price, tx.payload)
    return verify_signature(tx.public_key, body, tx.signature)


def tx_hash(wire: bytes) -> str:
    return "0x" + hashlib.sha256(wire).hexdigest()
