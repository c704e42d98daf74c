"""Cost benchmarks: per-operation fees, index-vs-scan query gas, yearly totals.

All dollar arithmetic uses decimal.Decimal end to end. Fees are exact
(gas x gas_price x usd_per_gwei) and only round half-up to cents when a
table is printed. The centralized-market reference costs are frozen
fixtures: a $52.58 yearly server fee, a 2.57% payment-gateway cut and a
15.58% selling cut taken from the seller's revenue.
"""

from __future__ import annotations

import csv
import random
import time
from dataclasses import dataclass, field
from datetime import date
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional

from anka import codec
from anka.chain import (
    DEFAULT_USD_PER_GWEI,
    SUGGESTED_GAS_LIMITS,
    Chain,
    GasSchedule,
    GenesisConfig,
    Receipt,
)
from anka.codec import BuyOffer, CancelOffer, Deploy, ListOffer, Register, Transfer
from anka.keys import KeyPair, generate_keypair

CENT = Decimal("0.01")

CENTRALIZED_SERVER_YEARLY_USD = Decimal("52.58")
CENTRALIZED_GATEWAY_RATE = Decimal("0.0257")
CENTRALIZED_SELLING_RATE = Decimal("0.1558")


@dataclass(frozen=True)
class CostParameters:
    usd_per_gwei: Decimal = Decimal(DEFAULT_USD_PER_GWEI)
    gas_price: int = 1

    def __post_init__(self):
        if self.usd_per_gwei <= 0 or self.gas_price <= 0:
            raise ValueError("cost parameters must be strictly positive")

    def fee_usd(self, gas_used: int) -> Decimal:
        return Decimal(gas_used * self.gas_price) * self.usd_per_gwei


@dataclass(frozen=True)
class CostRow:
    operation: str
    gas_used: int
    fee_gwei: int
    fee_usd: Decimal

    @property
    def fee_usd_cents(self) -> Decimal:
        return self.fee_usd.quantize(CENT, rounding=ROUND_HALF_UP)


@dataclass
class CostReport:
    title: str
    rows: list[CostRow] = field(default_factory=list)
    centralized_reference: dict = field(
        default_factory=lambda: {
            "server_yearly_usd": CENTRALIZED_SERVER_YEARLY_USD,
            "gateway_rate": CENTRALIZED_GATEWAY_RATE,
            "selling_rate": CENTRALIZED_SELLING_RATE,
        }
    )

    def row(self, operation: str) -> CostRow:
        for row in self.rows:
            if row.operation == operation:
                return row
        raise KeyError(operation)

    def table(self) -> str:
        widths = [
            max(len("operation"), *(len(r.operation) for r in self.rows)) if self.rows else 9,
            max(len("gas"), *(len(str(r.gas_used)) for r in self.rows)) if self.rows else 3,
            max(len("fee_gwei"), *(len(str(r.fee_gwei)) for r in self.rows)) if self.rows else 8,
            max(len("fee_usd"), *(len(f"{r.fee_usd_cents}") for r in self.rows)) if self.rows else 7,
        ]
        header = (
            f"{'operation':<{widths[0]}}  {'gas':>{widths[1]}}  "
            f"{'fee_gwei':>{widths[2]}}  {'fee_usd':>{widths[3]}}"
        )
        lines = [self.title, header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.operation:<{widths[0]}}  {r.gas_used:>{widths[1]}}  "
                f"{r.fee_gwei:>{widths[2]}}  {r.fee_usd_cents:>{widths[3]}}"
            )
        return "\n".join(lines)

    def write_csv(self, path: str | Path, append: bool = False) -> None:
        mode = "a" if append else "w"
        with open(path, mode, newline="") as fh:
            writer = csv.writer(fh)
            if not append:
                writer.writerow(["section", "operation", "gas_used", "fee_gwei", "fee_usd"])
            for r in self.rows:
                writer.writerow([self.title, r.operation, r.gas_used, r.fee_gwei, str(r.fee_usd)])


def _fresh_market(
    balance: int = 10**15,
    chain_date: date = date(2026, 1, 1),
    gas_schedule: Optional[GasSchedule] = None,
) -> tuple[Chain, KeyPair, KeyPair]:
    seller = generate_keypair(seed=b"bench-seller")
    buyer = generate_keypair(seed=b"bench-buyer")
    genesis = GenesisConfig(
        chain_date=chain_date,
        accounts={seller.address: balance, buyer.address: balance},
        gas_schedule=gas_schedule or GasSchedule(),
    )
    return Chain.from_genesis(genesis), seller, buyer


def _send(chain: Chain, keypair: KeyPair, nonce: int, payload) -> Receipt:
    tx = codec.make_signed_tx(
        keypair, nonce, payload, gas_limit=SUGGESTED_GAS_LIMITS[payload.kind_name]
    )
    receipt = chain.submit(tx)
    assert receipt.success, f"{payload.kind_name} unexpectedly {receipt.reason}"
    return receipt


def measure_operation_costs(
    params: Optional[CostParameters] = None,
    gas_schedule: Optional[GasSchedule] = None,
) -> CostReport:
    """Run one of each operation on a fresh chain and price the gas in USD.

    The extra `selling_deduction` row prices what the seller gives up on a
    sale beyond the asked price; the settlement is a direct transfer, so it
    is exactly zero.
    """
    params = params or CostParameters()
    chain, seller, buyer = _fresh_market(gas_schedule=gas_schedule)
    today = chain.config.chain_date
    price = 1_000_000

    rows: list[CostRow] = []

    def add(operation: str, gas_used: int) -> None:
        rows.append(
            CostRow(
                operation=operation,
                gas_used=gas_used,
                fee_gwei=gas_used * params.gas_price,
                fee_usd=params.fee_usd(gas_used),
            )
        )

    add("deploy", _send(chain, seller, 0, Deploy()).gas_used)
    add("register", _send(chain, seller, 1, Register(name="Bench Seller")).gas_used)
    _send(chain, buyer, 0, Register(name="Bench Buyer"))

    listing = ListOffer(
        energy_wh=500,
        voltage=24,
        price=price,
        postal_code="34450",
        lat_micro=41_205_000,
        lon_micro=29_073_000,
        offer_date=today,
    )
    add("list_offer", _send(chain, seller, 2, listing).gas_used)

    seller_before = chain.balance_of(seller.address)
    add("buy_offer", _send(chain, buyer, 1, BuyOffer(offer_id=0)).gas_used)
    deduction = price - (chain.balance_of(seller.address) - seller_before)
    rows.append(
        CostRow(
            operation="selling_deduction",
            gas_used=0,
            fee_gwei=deduction * params.gas_price,
            fee_usd=params.fee_usd(deduction),
        )
    )

    _send(chain, seller, 3, listing)
    add("cancel_offer", _send(chain, seller, 4, CancelOffer(offer_id=1)).gas_used)
    add(
        "transfer",
        _send(chain, seller, 5, Transfer(to=buyer.address, amount=1)).gas_used,
    )

    return CostReport(title="per-operation costs", rows=rows)


def seed_offers(
    chain: Chain,
    seller: KeyPair,
    count: int,
    postal_codes: int,
    seed: int = 0,
    start_nonce: int = 0,
) -> int:
    """List `count` offers spread evenly over `postal_codes` areas.

    Buckets are filled round-robin so every area holds exactly
    count/postal_codes offers when the division is even; locations are
    drawn from a seeded RNG inside one metro area. Returns the next nonce.
    """
    rng = random.Random(seed)
    today = chain.config.chain_date
    whitelist = chain.config.voltage_whitelist
    nonce = start_nonce
    for i in range(count):
        payload = ListOffer(
            energy_wh=rng.randrange(100, 5_000),
            voltage=rng.choice(whitelist),
            price=rng.randrange(10_000, 2_000_000),
            postal_code=f"Z{i % postal_codes:05d}",
            lat_micro=41_000_000 + rng.randrange(-400_000, 400_000),
            lon_micro=29_000_000 + rng.randrange(-400_000, 400_000),
            offer_date=today,
        )
        _send(chain, seller, nonce, payload)
        nonce += 1
    return nonce


def compare_query_strategies(
    offer_counts: list[int],
    postal_codes_per_bucket: int = 10,
    seed: int = 0,
    params: Optional[CostParameters] = None,
) -> CostReport:
    """Gas of the postal-bucket index vs the linear scan as the market grows.

    For each N the market is rebuilt with N offers spread over N/b postal
    codes (b = `postal_codes_per_bucket`), keeping the queried bucket at a
    fixed size while the whole day's market grows. The index query then
    costs the same at every N; the scan grows linearly.
    """
    params = params or CostParameters()
    bucket_size = postal_codes_per_bucket
    rows: list[CostRow] = []

    for n in offer_counts:
        chain, seller, _ = _fresh_market()
        _send(chain, seller, 0, Deploy())
        _send(chain, seller, 1, Register(name="Bench Seller"))
        areas = max(1, n // bucket_size)
        seed_offers(chain, seller, n, postal_codes=areas, seed=seed, start_nonce=2)
        today = chain.config.chain_date

        _, index_gas = chain.query_offers(today, "Z00000")
        rows.append(
            CostRow(
                operation=f"index_query[N={n}]",
                gas_used=index_gas,
                fee_gwei=index_gas * params.gas_price,
                fee_usd=params.fee_usd(index_gas),
            )
        )

        from anka.geo import GeoPoint

        buyer_at = GeoPoint(41_000_000, 29_000_000)
        _, scan_gas = chain.query_offers_by_diameter(buyer_at, 1_000_000.0, today)
        rows.append(
            CostRow(
                operation=f"diameter_scan[N={n}]",
                gas_used=scan_gas,
                fee_gwei=scan_gas * params.gas_price,
                fee_usd=params.fee_usd(scan_gas),
            )
        )

    return CostReport(title="index vs on-chain scan", rows=rows)


def annualize(
    listings_per_year: int,
    sales_per_year: int,
    avg_price_usd: Decimal | str = Decimal("3.00"),
    params: Optional[CostParameters] = None,
) -> CostReport:
    """Yearly USD totals: this market (deploy amortized once) vs the fixtures.

    Decentralized side: one deployment plus per-listing and per-purchase
    gas, zero selling deduction. Centralized side: the yearly server fee
    plus gateway and selling percentages of the traded volume.
    """
    if listings_per_year < 0 or sales_per_year < 0:
        raise ValueError("yearly counts must be non-negative")
    avg_price = Decimal(avg_price_usd)
    if avg_price < 0:
        raise ValueError("average price must be non-negative")
    params = params or CostParameters()

    unit = measure_operation_costs(params)
    deploy_usd = unit.row("deploy").fee_usd
    list_usd = unit.row("list_offer").fee_usd
    buy_usd = unit.row("buy_offer").fee_usd

    volume = avg_price * sales_per_year
    gateway = volume * CENTRALIZED_GATEWAY_RATE
    selling = volume * CENTRALIZED_SELLING_RATE

    def usd_row(operation: str, usd: Decimal) -> CostRow:
        return CostRow(operation=operation, gas_used=0, fee_gwei=0, fee_usd=usd)

    listings_total = list_usd * listings_per_year
    buys_total = buy_usd * sales_per_year
    rows = [
        usd_row("decentralized:deploy_once", deploy_usd),
        usd_row("decentralized:listings", listings_total),
        usd_row("decentralized:purchases", buys_total),
        usd_row("decentralized:selling_deduction", Decimal(0)),
        usd_row("decentralized:year1_total", deploy_usd + listings_total + buys_total),
        usd_row("centralized:server_yearly", CENTRALIZED_SERVER_YEARLY_USD),
        usd_row("centralized:gateway", gateway),
        usd_row("centralized:selling", selling),
        usd_row(
            "centralized:year1_total",
            CENTRALIZED_SERVER_YEARLY_USD + gateway + selling,
        ),
    ]
    return CostReport(
        title=f"yearly totals (L={listings_per_year}, S={sales_per_year}, "
        f"avg ${avg_price})",
        rows=rows,
    )


def bench_geo_kernels(n: int, seed: int = 0) -> list[dict]:
    """Time the batch haversine kernel on each available backend."""
    import numpy as np

    from anka._kernels import available_backends, haversine_many_with

    rng = np.random.default_rng(seed)
    lat = rng.uniform(-85.0, 85.0, n)
    lon = rng.uniform(-180.0, 180.0, n)
    out = []
    for backend in available_backends():
        haversine_many_with(backend, lat[:16], lon[:16], 41.0, 29.0)  # warm up / compile
        start = time.perf_counter()
        distances = haversine_many_with(backend, lat, lon, 41.0, 29.0)
        elapsed = time.perf_counter() - start
        out.append(
            {
                "backend": backend,
                "n": n,
                "seconds": elapsed,
                "checksum_m": float(distances.sum()),
            }
        )
    return out
