"""Shared helpers for the test suite: funded chains, traders, oracles."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import date, timedelta

from anka import codec
from anka.chain import (
    Chain,
    ExecutionContext,
    GasMeter,
    GenesisConfig,
    Receipt,
    StorageView,
    SUGGESTED_GAS_LIMITS,
)
from anka.contract import STATUS_ACTIVE, EnergyOffer, execute
from anka.keys import KeyPair, generate_keypair

CHAIN_DATE = date(2026, 3, 1)
FUNDS = 10**13


def make_genesis(accounts: dict[str, int], **overrides) -> GenesisConfig:
    return GenesisConfig(chain_date=CHAIN_DATE, accounts=accounts, **overrides)


@dataclass
class Trader:
    """A funded keypair with local nonce tracking against one chain."""

    keypair: KeyPair
    chain: Chain
    nonce: int = 0

    @property
    def address(self) -> str:
        return self.keypair.address

    def tx(self, payload, gas_limit=None, gas_price=1, nonce=None) -> codec.SignedTransaction:
        if nonce is None:
            nonce = self.nonce
        limit = gas_limit if gas_limit is not None else SUGGESTED_GAS_LIMITS[payload.kind_name]
        return codec.make_signed_tx(self.keypair, nonce, payload, limit, gas_price)

    def send(self, payload, gas_limit=None, gas_price=1) -> Receipt:
        receipt = self.chain.submit(self.tx(payload, gas_limit, gas_price))
        self.nonce += 1
        return receipt

    def must(self, payload, gas_limit=None) -> Receipt:
        receipt = self.send(payload, gas_limit)
        assert receipt.success, f"{payload.kind_name} reverted: {receipt.reason}"
        return receipt


def fresh_market(
    n_traders: int = 2, funds: int = FUNDS, **genesis_overrides
) -> tuple[Chain, list[Trader]]:
    """A deployed market with `n_traders` registered, funded traders."""
    keypairs = [generate_keypair(seed=f"trader-{i}".encode()) for i in range(n_traders)]
    genesis = make_genesis({kp.address: funds for kp in keypairs}, **genesis_overrides)
    chain = Chain.from_genesis(genesis)
    traders = [Trader(kp, chain) for kp in keypairs]
    traders[0].must(codec.Deploy())
    for i, trader in enumerate(traders):
        trader.must(codec.Register(name=f"Trader {i}"))
    return chain, traders


def list_payload(
    offer_date: date = CHAIN_DATE,
    postal: str = "34450",
    voltage: int = 24,
    price: int = 1_000_000,
    energy_wh: int = 500,
    lat_micro: int = 41_205_000,
    lon_micro: int = 29_073_000,
) -> codec.ListOffer:
    return codec.ListOffer(
        energy_wh=energy_wh,
        voltage=voltage,
        price=price,
        postal_code=postal,
        lat_micro=lat_micro,
        lon_micro=lon_micro,
        offer_date=offer_date,
    )


# -- unsigned fast path --------------------------------------------------------
#
# The property workloads execute contract handlers directly, skipping
# signatures and balances. The handlers, metering and storage are the real
# ones; only the transaction envelope is bypassed (it is covered separately).


def raw_exec(chain: Chain, caller: str, payload) -> None:
    meter = GasMeter(None, chain.config.gas_schedule)
    view = StorageView(chain.storage, meter)
    ctx = ExecutionContext(chain, caller, view, meter, max_fee=0)
    execute(ctx, payload)
    view.commit()


@dataclass
class OfferBook:
    """Plain-Python mirror of listed offers; the brute-force query oracle."""

    offers: list[EnergyOffer] = field(default_factory=list)

    def add(self, offer: EnergyOffer) -> None:
        self.offers.append(offer)

    def query(self, offer_date: date, postal: str, voltage=None) -> list[int]:
        return [
            o.offer_id
            for o in self.offers
            if o.status == STATUS_ACTIVE
            and o.offer_date == offer_date
            and o.postal_code == postal
            and (voltage is None or o.voltage == voltage)
        ]


def random_offer_fields(rng: random.Random, chain_date: date, postal_codes: list[str]):
    whitelist = (5, 9, 12, 24, 36, 48)
    return dict(
        energy_wh=rng.randrange(1, 10_000),
        voltage=rng.choice(whitelist),
        price=rng.randrange(1, 5_000_000),
        postal=rng.choice(postal_codes),
        offer_date=chain_date + timedelta(days=rng.randrange(0, 2)),
        lat_micro=rng.randrange(-90_000_000, 90_000_001),
        lon_micro=rng.randrange(-180_000_000, 180_000_001),
    )
