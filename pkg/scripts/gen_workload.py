"""Generate the bundled 1,000-transaction random market scenario.

The generator simulates every step on a real chain as it goes, so each
step's `expect` clause records the outcome the chain actually produced.
The finished file is validated by running it through the scenario runner
and comparing final state hashes.

Usage: python3 scripts/gen_workload.py [out_path]
"""

from __future__ import annotations

import json
import random
import sys
from datetime import date, timedelta
from pathlib import Path

from anka import codec
from anka.chain import SUGGESTED_GAS_LIMITS, Chain, GenesisConfig
from anka.errors import TxRejected
from anka.scenario import actor_keypair, run_scenario

SEED = 2026
TX_STEPS = 1_000
CHAIN_DATE = date(2026, 3, 1)
POSTALS = [f"M{i:04d}" for i in range(8)]
TRADERS = [f"p{i}" for i in range(6)]  # funded and registered
PAUPER = "p6"  # balance too small to cover any gas limit
LURKER = "p7"  # funded but never registers

ACCOUNTS = {name: 10**12 for name in TRADERS}
ACCOUNTS[PAUPER] = 1_000
ACCOUNTS[LURKER] = 10**10


def main(out_path: str) -> None:
    rng = random.Random(SEED)
    genesis = GenesisConfig(
        chain_date=CHAIN_DATE,
        accounts={actor_keypair(n).address: v for n, v in ACCOUNTS.items()},
    )
    chain = Chain.from_genesis(genesis)
    nonces: dict[str, int] = {}
    steps: list[dict] = []
    active: list[int] = []  # offer ids currently active, per the simulation
    sellers: dict[int, str] = {}

    def submit(actor: str, op: str, params: dict, gas_limit=None) -> dict:
        payload = build_payload(op, params)
        limit = gas_limit if gas_limit is not None else SUGGESTED_GAS_LIMITS[op]
        tx = codec.make_signed_tx(actor_keypair(actor), nonces.get(actor, 0), payload, limit)
        try:
            receipt = chain.submit(tx)
        except TxRejected as exc:
            expect = f"rejected:{exc.reason}"
        else:
            nonces[actor] = nonces.get(actor, 0) + 1
            if receipt.success:
                expect = "success"
                apply_success(op, params, receipt, actor)
            else:
                expect = f"reverted:{receipt.reason}"
        step = {"actor": actor, "op": op}
        if params:
            step["params"] = params
        if gas_limit is not None:
            step["gas_limit"] = gas_limit
        step["expect"] = expect
        steps.append(step)
        return step

    def build_payload(op: str, params: dict):
        if op == "deploy":
            return codec.Deploy()
        if op == "register":
            return codec.Register(name=str(params["name"]))
        if op == "list_offer":
            offer_date = (
                date.fromisoformat(params["date"]) if "date" in params else CHAIN_DATE
            )
            return codec.ListOffer(
                energy_wh=int(params["energy_wh"]),
                voltage=int(params["voltage"]),
                price=int(params["price"]),
                postal_code=str(params["postal_code"]),
                lat_micro=int(round(float(params["lat"]) * 1_000_000)),
                lon_micro=int(round(float(params["lon"]) * 1_000_000)),
                offer_date=offer_date,
            )
        if op == "buy_offer":
            return codec.BuyOffer(offer_id=int(params["offer_id"]))
        if op == "cancel_offer":
            return codec.CancelOffer(offer_id=int(params["offer_id"]))
        if op == "transfer":
            return codec.Transfer(
                to=actor_keypair(str(params["to"])).address, amount=int(params["amount"])
            )
        raise ValueError(op)

    def apply_success(op: str, params: dict, receipt, actor: str) -> None:
        if op == "list_offer":
            offer_id = receipt.events[0].attrs["offer_id"]
            active.append(offer_id)
            sellers[offer_id] = actor
        elif op in ("buy_offer", "cancel_offer"):
            offer_id = int(params["offer_id"])
            if offer_id in active:
                active.remove(offer_id)

    def valid_list_params() -> dict:
        day = CHAIN_DATE + timedelta(days=rng.randrange(0, 2))
        return {
            "energy_wh": rng.randrange(50, 5_000),
            "voltage": rng.choice([5, 9, 12, 24, 36, 48]),
            "price": rng.randrange(10_000, 5_000_000),
            "postal_code": rng.choice(POSTALS),
            "lat": round(rng.uniform(40.5, 41.5), 6),
            "lon": round(rng.uniform(28.5, 29.5), 6),
            "date": day.isoformat(),
        }

    def random_error_step() -> None:
        trader = rng.choice(TRADERS)
        kind = rng.randrange(10)
        if kind == 0:
            submit(trader, "list_offer", {**valid_list_params(), "voltage": 11})
        elif kind == 1:
            submit(trader, "list_offer", {**valid_list_params(), "price": 0})
        elif kind == 2:
            submit(trader, "list_offer", {**valid_list_params(), "energy_wh": 0})
        elif kind == 3:
            submit(trader, "list_offer", {**valid_list_params(), "postal_code": "!!"})
        elif kind == 4:
            submit(trader, "list_offer", {**valid_list_params(), "date": "2026-02-27"})
        elif kind == 5:
            submit(trader, "buy_offer", {"offer_id": 999_999})
        elif kind == 6:
            submit(trader, "cancel_offer", {"offer_id": 999_999})
        elif kind == 7:
            submit(trader, "register", {"name": "Again"})  # AlreadyRegistered
        elif kind == 8:
            submit(PAUPER, "transfer", {"to": rng.choice(TRADERS), "amount": 1})
        else:
            choice = rng.randrange(3)
            if choice == 0:
                submit(LURKER, "list_offer", valid_list_params())  # NotRegistered
            elif choice == 1:
                submit(trader, "list_offer", valid_list_params(), gas_limit=100_000)
            else:
                big = 10**13  # far beyond any trader balance: reverts in transfer
                submit(trader, "transfer", {"to": rng.choice(TRADERS), "amount": big})

    # fixed opening: deploy, then register the six traders
    submit(TRADERS[0], "deploy", {})
    for i, name in enumerate(TRADERS):
        submit(name, "register", {"name": f"Peer {i}"})

    while len(steps) < TX_STEPS:
        roll = rng.random()
        if roll < 0.45:
            submit(rng.choice(TRADERS), "list_offer", valid_list_params())
        elif roll < 0.65 and active:
            offer_id = rng.choice(active)
            buyer = rng.choice(TRADERS)  # may hit the seller: SelfPurchase
            submit(buyer, "buy_offer", {"offer_id": offer_id})
        elif roll < 0.75 and active:
            offer_id = rng.choice(active)
            canceller = sellers[offer_id] if rng.random() < 0.7 else rng.choice(TRADERS)
            submit(canceller, "cancel_offer", {"offer_id": offer_id})
        elif roll < 0.85:
            src, dst = rng.sample(TRADERS, 2)
            submit(src, "transfer", {"to": dst, "amount": rng.randrange(1, 10**9)})
        else:
            random_error_step()

    assert len(steps) == TX_STEPS, len(steps)

    # closing self-checks: balances of every named account, two bucket counts
    pseudo: list[dict] = []
    for name in sorted(ACCOUNTS):
        pseudo.append(
            {
                "op": "expect_balance",
                "params": {
                    "of": name,
                    "amount": chain.balance_of(actor_keypair(name).address),
                },
            }
        )
    for postal in POSTALS[:2]:
        for day in (CHAIN_DATE, CHAIN_DATE + timedelta(days=1)):
            offers, _ = chain.query_offers(day, postal)
            pseudo.append(
                {
                    "op": "expect_offers",
                    "params": {
                        "date": day.isoformat(),
                        "postal_code": postal,
                        "count": len(offers),
                    },
                }
            )

    header = {
        "genesis": {
            "accounts": dict(sorted(ACCOUNTS.items())),
            "chain_date": CHAIN_DATE.isoformat(),
        }
    }
    lines = [
        "# Randomized market workload: exactly 1,000 transactions over eight",
        "# postal areas, with deliberate reverts and rejections mixed in.",
        json.dumps(header),
        *(json.dumps(s) for s in steps),
        *(json.dumps(s) for s in pseudo),
    ]
    Path(out_path).write_text("\n".join(lines) + "\n")

    result = run_scenario(out_path)
    assert result.state_hash == chain.state_hash(), "runner disagrees with simulation"
    assert result.steps_executed == TX_STEPS + len(pseudo)

    outcomes = [s["expect"] for s in steps]
    print(f"wrote {out_path}")
    print(f"tx steps: {len(steps)}  pseudo steps: {len(pseudo)}")
    print(f"success: {sum(1 for o in outcomes if o == 'success')}")
    print(f"reverted: {sum(1 for o in outcomes if o.startswith('reverted'))}")
    print(f"rejected: {sum(1 for o in outcomes if o.startswith('rejected'))}")
    print(f"state_hash: {result.state_hash}")


if __name__ == "__main__":
    default = Path(__file__).resolve().parent.parent / "src/anka/scenarios/random-market-1000.jsonl"
    main(sys.argv[1] if len(sys.argv) > 1 else str(default))
