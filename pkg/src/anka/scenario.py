"""Scripted market scenarios: JSON-lines files driving a chain deterministically.

File format (one JSON object per line, blank lines and `#` comments skipped):

    {"genesis": {"accounts": {"alice": 1000000000000, ...}, "chain_date": "2026-08-14"}}
    {"actor": "alice", "op": "deploy"}
    {"actor": "alice", "op": "register", "params": {"name": "Alice"}}
    {"actor": "alice", "op": "list_offer", "params": {"energy_wh": 500, "voltage": 24,
        "price": 1000000, "postal_code": "34450", "lat": 41.205, "lon": 29.073}}
    {"actor": "bob", "op": "buy_offer", "params": {"offer_id": 0}, "expect": "success"}
    {"op": "expect_balance", "params": {"of": "alice", "amount": 999999989400000}}

The first line is the genesis header; every other line is a step. Actor keys
derive from the actor name alone, so the same file always produces the same
addresses, transactions and final state hash. Transaction steps accept
`expect`: "success" (default), "reverted:<Reason>" or "rejected:<Reason>";
a mismatch aborts the run with the failing step index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional

from anka import codec
from anka.chain import SUGGESTED_GAS_LIMITS, Chain, GenesisConfig
from anka.codec import (
    BuyOffer,
    CancelOffer,
    Deploy,
    ListOffer,
    Payload,
    Register,
    Transfer,
)
from anka.errors import RpcError, ScenarioError, TxRejected
from anka.keys import KeyPair, generate_keypair

TX_OPS = ("deploy", "register", "list_offer", "buy_offer", "cancel_offer", "transfer")


def actor_keypair(name: str) -> KeyPair:
    """The fixed keypair behind an actor name; same name, same address."""
    return generate_keypair(seed=b"scenario-actor:" + name.encode())


@dataclass
class ScenarioResult:
    state_hash: str
    balances: dict[str, int]
    steps_executed: int
    chain: Optional[Chain] = None

    def summary(self) -> str:
        lines = [f"steps: {self.steps_executed}", f"state_hash: {self.state_hash}"]
        for name, balance in sorted(self.balances.items()):
            lines.append(f"balance[{name}]: {balance}")
        return "\n".join(lines)


class _ChainBackend:
    """Runs steps against an in-process chain built from the header genesis."""

    def __init__(self, genesis: GenesisConfig):
        self.chain = Chain.from_genesis(genesis)

    def chain_date(self) -> date:
        return self.chain.config.chain_date

    def submit(self, tx: codec.SignedTransaction) -> tuple[str, Optional[str]]:
        try:
            receipt = self.chain.submit(tx)
        except TxRejected as exc:
            return "rejected", exc.reason
        return receipt.status, receipt.reason

    def balance_of(self, address: str) -> int:
        return self.chain.balance_of(address)

    def count_offers(self, offer_date: date, postal_code: str) -> int:
        offers, _ = self.chain.query_offers(offer_date, postal_code)
        return len(offers)

    def state_hash(self) -> str:
        return self.chain.state_hash()


class _NodeBackend:
    """Runs steps against a live node; actors are funded from a faucet keystore."""

    def __init__(self, client, faucet: KeyPair, genesis_accounts: dict[str, int]):
        self.client = client
        info = client.chain_info()
        self._chain_date = date.fromisoformat(info["chain_date"])
        nonce = client.get_account(faucet.address)["nonce"]
        for name, amount in sorted(genesis_accounts.items()):
            tx = codec.make_signed_tx(
                faucet,
                nonce,
                Transfer(to=actor_keypair(name).address, amount=amount),
                gas_limit=SUGGESTED_GAS_LIMITS["transfer"],
            )
            client.send_transaction(tx)
            nonce += 1

    def chain_date(self) -> date:
        return self._chain_date

    def submit(self, tx: codec.SignedTransaction) -> tuple[str, Optional[str]]:
        try:
            receipt = self.client.send_transaction(tx)
        except RpcError as exc:
            if exc.code == -32000:
                reason = exc.message.split(":", 1)[0].strip()
                return "rejected", reason
            raise
        return receipt["status"], receipt.get("reason")

    def balance_of(self, address: str) -> int:
        return self.client.get_account(address)["balance"]

    def count_offers(self, offer_date: date, postal_code: str) -> int:
        result = self.client.get_offers(offer_date.isoformat(), postal_code)
        return len(result["offers"])

    def state_hash(self) -> str:
        return self.client.state_hash()


def parse_scenario(text: str) -> tuple[dict, list[dict]]:
    """Split a scenario file into (header, steps); validates line-level JSON."""
    header: Optional[dict] = None
    steps: list[dict] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScenarioError(lineno, f"bad JSON: {exc}") from exc
        if header is None:
            if "genesis" not in obj:
                raise ScenarioError(lineno, "first line must be the genesis header")
            header = obj
        else:
            steps.append(obj)
    if header is None:
        raise ScenarioError(0, "empty scenario file")
    return header, steps


def _resolve_address(ref: str) -> str:
    return ref if ref.startswith("0x") else actor_keypair(ref).address


def _build_payload(op: str, params: dict, chain_date: date) -> Payload:
    if op == "deploy":
        return Deploy()
    if op == "register":
        return Register(name=str(params["name"]))
    if op == "list_offer":
        offer_date = (
            date.fromisoformat(params["date"]) if "date" in params else chain_date
        )
        return ListOffer(
            energy_wh=int(params["energy_wh"]),
            voltage=int(params["voltage"]),
            price=int(params["price"]),
            postal_code=str(params["postal_code"]),
            lat_micro=int(round(float(params["lat"]) * 1_000_000)),
            lon_micro=int(round(float(params["lon"]) * 1_000_000)),
            offer_date=offer_date,
        )
    if op == "buy_offer":
        return BuyOffer(offer_id=int(params["offer_id"]))
    if op == "cancel_offer":
        return CancelOffer(offer_id=int(params["offer_id"]))
    if op == "transfer":
        return Transfer(to=_resolve_address(str(params["to"])), amount=int(params["amount"]))
    raise ValueError(f"unknown op: {op}")


def _parse_expect(raw: str) -> tuple[str, Optional[str]]:
    if ":" in raw:
        status, reason = raw.split(":", 1)
        return status, reason
    return raw, None


def run_scenario(
    path: str | Path,
    node_url: Optional[str] = None,
    faucet_keystore: Optional[str] = None,
) -> ScenarioResult:
    """Execute a scenario file; in-process by default, against a node if given.

    The header's genesis accounts map actor names to starting balances. In
    node mode the chain already exists, so those balances are funded from
    the faucet keystore instead of minted at genesis.
    """
    header, steps = parse_scenario(Path(path).read_text())
    genesis_raw = dict(header["genesis"])
    accounts_by_name = {
        str(k): int(v) for k, v in (genesis_raw.pop("accounts", {}) or {}).items()
    }

    if node_url is None:
        genesis_raw["accounts"] = {
            actor_keypair(name).address: amount for name, amount in accounts_by_name.items()
        }
        backend = _ChainBackend(GenesisConfig.from_dict(genesis_raw))
    else:
        if faucet_keystore is None:
            raise ValueError("node mode needs a faucet keystore to fund actors")
        from anka.client import NodeClient
        from anka.keys import load_keystore

        backend = _NodeBackend(
            NodeClient(node_url), load_keystore(faucet_keystore), accounts_by_name
        )

    nonces: dict[str, int] = {}
    executed = 0
    for index, step in enumerate(steps):
        try:
            _run_step(backend, step, nonces)
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError(index, str(exc)) from exc
        executed += 1

    balances = {
        name: backend.balance_of(actor_keypair(name).address)
        for name in sorted(accounts_by_name)
    }
    chain = backend.chain if isinstance(backend, _ChainBackend) else None
    return ScenarioResult(
        state_hash=backend.state_hash(),
        balances=balances,
        steps_executed=executed,
        chain=chain,
    )


def _run_step(backend, step: dict, nonces: dict[str, int]) -> None:
    op = step.get("op")
    params = step.get("params") or {}

    if op == "expect_balance":
        address = _resolve_address(str(params["of"]))
        actual = backend.balance_of(address)
        expected = int(params["amount"])
        if actual != expected:
            raise ValueError(f"balance of {params['of']} is {actual}, expected {expected}")
        return
    if op == "expect_offers":
        count = backend.count_offers(
            date.fromisoformat(params["date"]) if "date" in params else backend.chain_date(),
            str(params["postal_code"]),
        )
        expected = int(params["count"])
        if count != expected:
            raise ValueError(f"{count} offers in bucket, expected {expected}")
        return
    if op not in TX_OPS:
        raise ValueError(f"unknown op: {op}")

    actor = str(step["actor"])
    keypair = actor_keypair(actor)
    nonce = nonces.get(actor, 0)
    payload = _build_payload(op, params, backend.chain_date())
    tx = codec.make_signed_tx(
        keypair,
        nonce,
        payload,
        gas_limit=int(step.get("gas_limit", SUGGESTED_GAS_LIMITS[op])),
        gas_price=int(step.get("gas_price", 1)),
    )
    status, reason = backend.submit(tx)
    if status != "rejected":
        nonces[actor] = nonce + 1  # executed txs consume the nonce either way

    want_status, want_reason = _parse_expect(str(step.get("expect", "success")))
    if status != want_status or (want_reason is not None and reason != want_reason):
        got = f"{status}:{reason}" if reason else status
        want = f"{want_status}:{want_reason}" if want_reason else want_status
        raise ValueError(f"{op} by {actor} ended {got}, expected {want}")
