"""Freeze cross-implementation test vectors into tests/fixtures/shared_vectors.json.

Any other client implementation (e.g. the browser dApp) must reproduce these
bytes exactly: address derivation, payload encoding, signing bytes, full wire
transactions and hashes.

Usage: python3 scripts/gen_vectors.py
"""

from __future__ import annotations

import dataclasses
import json
from datetime import date
from pathlib import Path

from anka import codec
from anka.geo import GeoPoint, haversine
from anka.keys import generate_keypair

OUT = Path(__file__).resolve().parent.parent / "tests/fixtures/shared_vectors.json"

PAYLOADS = {
    "deploy": codec.Deploy(),
    "register": codec.Register(name="Vector Trader"),
    "list_offer": codec.ListOffer(
        energy_wh=500,
        voltage=24,
        price=1_000_000,
        postal_code="34450",
        lat_micro=41_205_000,
        lon_micro=29_073_000,
        offer_date=date(2026, 3, 1),
    ),
    "buy_offer": codec.BuyOffer(offer_id=7),
    "cancel_offer": codec.CancelOffer(offer_id=7),
}


def main() -> None:
    keys = []
    for seed in ("vector-a", "vector-b"):
        kp = generate_keypair(seed=seed.encode())
        keys.append(
            {
                "seed": seed,
                "private_key_hex": kp.private_key.hex(),
                "public_key_hex": kp.public_key.hex(),
                "address": kp.address,
            }
        )

    signer = generate_keypair(seed=b"vector-a")
    transfer = codec.Transfer(to=keys[1]["address"], amount=123_456_789)
    payloads = dict(PAYLOADS, transfer=transfer)

    tx_vectors = []
    for name, payload in payloads.items():
        nonce = 7
        gas_limit = 700_000
        gas_price = 1
        tx = codec.make_signed_tx(signer, nonce, payload, gas_limit, gas_price)
        fields = {
            k: v.isoformat() if isinstance(v, date) else v
            for k, v in dataclasses.asdict(payload).items()
        }
        tx_vectors.append(
            {
                "name": name,
                "kind": payload.kind,
                "nonce": nonce,
                "gas_limit": gas_limit,
                "gas_price": gas_price,
                "payload": fields,
                "payload_hex": codec.encode_payload(payload).hex(),
                "signing_bytes_hex": codec.signing_bytes(
                    signer.address, nonce, gas_limit, gas_price, payload
                ).hex(),
                "wire_hex": codec.encode_tx(tx).hex(),
                "tx_hash": tx.tx_hash,
            }
        )

    vectors = {
        "comment": "cross-implementation vectors; every client must match these bytes",
        "address_derivation": keys,
        "date_epoch_days": [
            {"date": "1970-01-01", "days": 0},
            {"date": "2026-03-01", "days": codec.date_to_days(date(2026, 3, 1))},
            {"date": "2026-08-14", "days": codec.date_to_days(date(2026, 8, 14))},
        ],
        "transactions": tx_vectors,
        "fee_display": [
            {"gas_used": 3_282_000, "gas_price": 1, "usd_per_gwei": "0.00000164534", "fee_usd_cents": "5.40"},
            {"gas_used": 534_845, "gas_price": 1, "usd_per_gwei": "0.00000164534", "fee_usd_cents": "0.88"},
            {"gas_used": 72_934, "gas_price": 1, "usd_per_gwei": "0.00000164534", "fee_usd_cents": "0.12"},
        ],
        "distances": [
            {
                "name": pair_name,
                "a": {"lat_micro": a.lat_micro, "lon_micro": a.lon_micro},
                "b": {"lat_micro": b.lat_micro, "lon_micro": b.lon_micro},
                "meters": haversine(a, b),
            }
            for pair_name, a, b in [
                (
                    "istanbul-ankara",
                    GeoPoint(41_008_200, 28_978_400),
                    GeoPoint(39_933_400, 32_859_700),
                ),
                ("same-block", GeoPoint(41_205_000, 29_073_000), GeoPoint(41_206_000, 29_074_000)),
                ("equator-degree", GeoPoint(0, 0), GeoPoint(0, 1_000_000)),
                (
                    "southern-hemisphere",
                    GeoPoint(-33_868_800, 151_209_300),
                    GeoPoint(-37_813_600, 144_963_100),
                ),
                ("antimeridian", GeoPoint(52_000_000, 179_900_000), GeoPoint(52_000_000, -179_900_000)),
            ]
        ],
    }

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(vectors, indent=2) + "\n")
    print(f"wrote {OUT} ({len(tx_vectors)} tx vectors)")


if __name__ == "__main__":
    main()
