"""Deterministic simulated blockchain: accounts, gas metering, sequencing.

One transaction per block, one sequencer, no consensus: the chain is the
deterministic substrate the marketplace runs on. All mutation happens inside
`Chain.submit` under a single lock; queries take the same lock briefly and
observe a consistent state. Gas fees accumulate in a fee sink account so
that total supply (balances + sink) is conserved by every transaction.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable, Iterable, Optional

import yaml

from anka import codec
from anka.codec import Payload, SignedTransaction, Transfer
from anka.errors import (
    OUT_OF_GAS,
    REJECT_BAD_NONCE,
    REJECT_BAD_SIGNATURE,
    REJECT_INSUFFICIENT_FUNDS,
    AnkaError,
    ContractRevert,
    OutOfGasSignal,
    TxRejected,
)

DEFAULT_VOLTAGE_WHITELIST = (5, 9, 12, 24, 36, 48)
DEFAULT_USD_PER_GWEI = "0.00000164534"

# Base-unit economics: 1 token = 10^9 base units ("gwei-equivalent"), and the
# default gas price of 1 base unit per gas makes gas_used numerically equal to
# the fee in gwei.
BASE_UNITS_PER_TOKEN = 10**9

# Comfortable client-side gas limits per payload kind. Unused gas is never
# charged, so these only need to sit above the schedule totals.
SUGGESTED_GAS_LIMITS = {
    "deploy": 4_000_000,
    "register": 120_000,
    "list_offer": 700_000,
    "buy_offer": 120_000,
    "cancel_offer": 60_000,
    "transfer": 30_000,
}


@dataclass(frozen=True)
class GasSchedule:
    """Per-operation base gas plus storage/loop unit costs.

    Base costs are calibrated so the metered totals land on the fee targets
    the benchmark reproduces: deploy 3,282,000 / list 534,845 / buy 72,934
    gas at the default storage and iteration prices.
    """

    deploy: int = 3_276_800
    register: int = 44_600
    list_offer: int = 513_845
    buy_offer: int = 62_134
    cancel_offer: int = 19_400
    transfer: int = 21_000
    storage_write: int = 5_000
    storage_read: int = 200
    iteration: int = 50

    def __post_init__(self):
        for name, value in self.to_dict().items():
            if value <= 0:
                raise ValueError(f"gas schedule entry {name} must be positive")

    def base_for(self, kind_name: str) -> int:
        return getattr(self, kind_name)

    def to_dict(self) -> dict[str, int]:
        return {
            "deploy": self.deploy,
            "register": self.register,
            "list_offer": self.list_offer,
            "buy_offer": self.buy_offer,
            "cancel_offer": self.cancel_offer,
            "transfer": self.transfer,
            "storage_write": self.storage_write,
            "storage_read": self.storage_read,
            "iteration": self.iteration,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "GasSchedule":
        return cls(**{k: int(v) for k, v in raw.items()})


@dataclass(frozen=True)
class GenesisConfig:
    """Chain genesis: funded accounts, gas schedule and market parameters.

    `chain_date` fixes the chain's notion of "today". It is part of genesis
    rather than read from the wall clock so that replaying a transaction log
    reproduces identical validation outcomes at any later time.
    """

    chain_date: date
    accounts: dict[str, int] = field(default_factory=dict)
    gas_schedule: GasSchedule = field(default_factory=GasSchedule)
    gas_price: int = 1
    date_window_days: int = 2
    voltage_whitelist: tuple[int, ...] = DEFAULT_VOLTAGE_WHITELIST
    usd_per_gwei: str = DEFAULT_USD_PER_GWEI

    def to_dict(self) -> dict:
        return {
            "chain_date": self.chain_date.isoformat(),
            "accounts": dict(sorted(self.accounts.items())),
            "gas_schedule": self.gas_schedule.to_dict(),
            "gas_price": self.gas_price,
            "date_window_days": self.date_window_days,
            "voltage_whitelist": list(self.voltage_whitelist),
            "usd_per_gwei": self.usd_per_gwei,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "GenesisConfig":
        return cls(
            chain_date=date.fromisoformat(raw["chain_date"]),
            accounts={str(k): int(v) for k, v in (raw.get("accounts") or {}).items()},
            gas_schedule=GasSchedule.from_dict(raw.get("gas_schedule") or {}),
            gas_price=int(raw.get("gas_price", 1)),
            date_window_days=int(raw.get("date_window_days", 2)),
            voltage_whitelist=tuple(
                int(v) for v in raw.get("voltage_whitelist", DEFAULT_VOLTAGE_WHITELIST)
            ),
            usd_per_gwei=str(raw.get("usd_per_gwei", DEFAULT_USD_PER_GWEI)),
        )


def load_genesis(path: str | Path) -> GenesisConfig:
    with open(path) as fh:
        return GenesisConfig.from_dict(yaml.safe_load(fh))


def save_genesis(path: str | Path, config: GenesisConfig) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=False)


@dataclass
class Account:
    address: str
    balance: int = 0
    nonce: int = 0


@dataclass(frozen=True)
class Event:
    kind: str
    attrs: dict
    height: int
    seq: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seq": self.seq, "height": self.height, **self.attrs}


@dataclass(frozen=True)
class Receipt:
    tx_hash: str
    status: str  # "success" | "reverted"
    reason: Optional[str]
    gas_used: int
    block_height: int
    events: tuple[Event, ...]

    @property
    def success(self) -> bool:
        return self.status == "success"

    def to_dict(self) -> dict:
        return {
            "tx_hash": self.tx_hash,
            "status": self.status,
            "reason": self.reason,
            "gas_used": self.gas_used,
            "block_height": self.block_height,
            "events": [e.to_dict() for e in self.events],
        }


@dataclass(frozen=True)
class LogEntry:
    """One submitted transaction and its outcome, as persisted to JSON lines."""

    wire_hex: str
    receipt: Optional[Receipt]  # None when the tx was rejected pre-execution
    rejected: Optional[str] = None

    def to_dict(self) -> dict:
        if self.receipt is not None:
            return {"tx": self.wire_hex, "receipt": self.receipt.to_dict()}
        return {"tx": self.wire_hex, "rejected": self.rejected}

    def outcome_key(self) -> tuple:
        if self.receipt is not None:
            r = self.receipt
            return ("receipt", r.status, r.reason, r.gas_used, r.block_height)
        return ("rejected", self.rejected)


class GasMeter:
    """Counts gas against a limit; raises OutOfGasSignal when exceeded."""

    def __init__(self, limit: Optional[int], schedule: GasSchedule):
        self.limit = limit
        self.schedule = schedule
        self.used = 0

    def charge(self, amount: int) -> None:
        self.used += amount
        if self.limit is not None and self.used > self.limit:
            raise OutOfGasSignal()

    def charge_read(self) -> None:
        self.charge(self.schedule.storage_read)

    def charge_write(self) -> None:
        self.charge(self.schedule.storage_write)

    def charge_iteration(self) -> None:
        self.charge(self.schedule.iteration)


def _own_copy(value):
    # Stored lists/dicts are flat; a shallow copy is enough to keep handlers
    # from aliasing committed state.
    if isinstance(value, list):
        return list(value)
    if isinstance(value, dict):
        return dict(value)
    return value


class StorageView:
    """Metered overlay over contract storage; writes commit only on success."""

    def __init__(self, base: dict, meter: GasMeter):
        self._base = base
        self._writes: dict = {}
        self.meter = meter

    def get(self, key: str, default=None):
        self.meter.charge_read()
        if key in self._writes:
            return _own_copy(self._writes[key])
        return _own_copy(self._base.get(key, default))

    def set(self, key: str, value) -> None:
        self.meter.charge_write()
        self._writes[key] = _own_copy(value)

    def commit(self) -> None:
        self._base.update(self._writes)


class ExecutionContext:
    """Everything a contract handler may touch during one transaction."""

    def __init__(
        self,
        chain: "Chain",
        caller: str,
        storage: StorageView,
        meter: GasMeter,
        max_fee: int,
    ):
        self.chain = chain
        self.caller = caller
        self.storage = storage
        self.meter = meter
        self.config = chain.config
        self.chain_date = chain.config.chain_date
        self._max_fee = max_fee
        self._deltas: dict[str, int] = {}
        self.events: list[tuple[str, dict]] = []

    def emit(self, kind: str, **attrs) -> None:
        self.events.append((kind, attrs))

    def _available(self, addr: str) -> int:
        balance = self.chain.balance_of(addr) + self._deltas.get(addr, 0)
        if addr == self.caller:
            balance -= self._max_fee  # the fee holdback cannot be spent as value
        return balance

    def transfer_value(self, src: str, dst: str, amount: int) -> None:
        from anka.errors import REVERT_INSUFFICIENT_FUNDS

        if amount < 0:
            raise ContractRevert(REVERT_INSUFFICIENT_FUNDS, "negative amount")
        if self._available(src) < amount:
            raise ContractRevert(REVERT_INSUFFICIENT_FUNDS)
        self._deltas[src] = self._deltas.get(src, 0) - amount
        self._deltas[dst] = self._deltas.get(dst, 0) + amount

    def balance_deltas(self) -> dict[str, int]:
        return self._deltas


HandlerFn = Callable[[ExecutionContext, Payload], None]


class Chain:
    """The sequencer plus all chain state. Thread-safe; single writer."""

    def __init__(self, config: GenesisConfig, handler: Optional[HandlerFn] = None):
        if handler is None:
            from anka.contract import execute as handler  # default marketplace

        self.config = config
        self.handler = handler
        self.accounts: dict[str, Account] = {
            addr: Account(address=addr, balance=bal)
            for addr, bal in sorted(config.accounts.items())
        }
        self.storage: dict = {}
        self.height = 0
        self.fee_sink = 0
        self.tx_log: list[LogEntry] = []
        self.events: list[Event] = []
        self._seq = 0
        self._lock = threading.RLock()
        self._event_hooks: list[Callable[[Event], None]] = []

    @classmethod
    def from_genesis(cls, config: GenesisConfig) -> "Chain":
        return cls(config)

    # -- reads ---------------------------------------------------------------

    def balance_of(self, address: str) -> int:
        acct = self.accounts.get(address)
        return acct.balance if acct else 0

    def nonce_of(self, address: str) -> int:
        acct = self.accounts.get(address)
        return acct.nonce if acct else 0

    def total_supply(self) -> int:
        with self._lock:
            return sum(a.balance for a in self.accounts.values()) + self.fee_sink

    def state_dict(self) -> dict:
        with self._lock:
            return {
                "height": self.height,
                "fee_sink": self.fee_sink,
                "accounts": {
                    a.address: {"balance": a.balance, "nonce": a.nonce}
                    for a in self.accounts.values()
                },
                "storage": dict(self.storage),
                "config": self.config.to_dict(),
            }

    def state_bytes(self) -> bytes:
        return json.dumps(self.state_dict(), sort_keys=True, separators=(",", ":")).encode()

    def state_hash(self) -> str:
        return "0x" + hashlib.sha256(self.state_bytes()).hexdigest()

    def add_event_hook(self, hook: Callable[[Event], None]) -> None:
        with self._lock:
            self._event_hooks.append(hook)

    def subscribe(
        self, push: Callable[[Event], None], from_seq: int = 0
    ) -> tuple[list[Event], Callable[[], None]]:
        """Register a live event consumer without missing or repeating events.

        Returns the backlog of events with seq >= from_seq plus an
        unsubscribe callable; everything after the backlog reaches `push`.
        Snapshot and registration happen under the chain lock, so the
        backlog boundary is exact.
        """
        with self._lock:
            backlog = [e for e in self.events if e.seq >= from_seq]
            self._event_hooks.append(push)

        def unsubscribe() -> None:
            with self._lock:
                if push in self._event_hooks:
                    self._event_hooks.remove(push)

        return backlog, unsubscribe

    @property
    def last_seq(self) -> int:
        with self._lock:
            return self._seq

    # -- execution -----------------------------------------------------------

    def submit_wire(self, wire: bytes) -> Receipt:
        return self.submit(codec.decode_tx(wire))

    def submit(self, tx: SignedTransaction) -> Receipt:
        """Execute one transaction as the next block.

        Raises TxRejected (BadSignature / BadNonce / InsufficientFunds) with
        no state change and no gas charge; otherwise returns a Receipt, with
        reverted receipts still charging the gas actually used.
        """
        with self._lock:
            wire = codec.encode_tx(tx)
            txh = codec.tx_hash(wire)
            try:
                self._validate(tx)
            except TxRejected as exc:
                self.tx_log.append(LogEntry(wire.hex(), None, rejected=exc.reason))
                raise
            receipt = self._execute(tx, txh)
            self.tx_log.append(LogEntry(wire.hex(), receipt))
            return receipt

    def _validate(self, tx: SignedTransaction) -> None:
        if not codec.verify_tx(tx):
            raise TxRejected(REJECT_BAD_SIGNATURE)
        account = self.accounts.get(tx.sender)
        nonce = account.nonce if account else 0
        if tx.nonce != nonce:
            raise TxRejected(REJECT_BAD_NONCE, f"expected {nonce}, got {tx.nonce}")
        balance = account.balance if account else 0
        if balance < tx.gas_limit * tx.gas_price:
            raise TxRejected(REJECT_INSUFFICIENT_FUNDS, "cannot cover the gas limit")

    def _execute(self, tx: SignedTransaction, txh: str) -> Receipt:
        schedule = self.config.gas_schedule
        meter = GasMeter(tx.gas_limit, schedule)
        view = StorageView(self.storage, meter)
        max_fee = tx.gas_limit * tx.gas_price
        ctx = ExecutionContext(self, tx.sender, view, meter, max_fee)

        status, reason = "success", None
        try:
            meter.charge(schedule.base_for(tx.payload.kind_name))
            if isinstance(tx.payload, Transfer):
                ctx.transfer_value(tx.sender, tx.payload.to, tx.payload.amount)
            else:
                self.handler(ctx, tx.payload)
            gas_used = meter.used
        except ContractRevert as exc:
            status, reason = "reverted", exc.reason
            gas_used = meter.used
        except OutOfGasSignal:
            status, reason = "reverted", OUT_OF_GAS
            gas_used = tx.gas_limit

        self.height += 1
        events: list[Event] = []
        if status == "success":
            view.commit()
            for addr, delta in ctx.balance_deltas().items():
                self._account(addr).balance += delta
            for kind, attrs in ctx.events:
                self._seq += 1
                events.append(Event(kind=kind, attrs=attrs, height=self.height, seq=self._seq))

        fee = gas_used * tx.gas_price
        sender = self._account(tx.sender)
        sender.balance -= fee
        assert sender.balance >= 0, "fee holdback must cover the charged fee"
        self.fee_sink += fee
        sender.nonce += 1

        self.events.extend(events)
        for event in events:
            for hook in self._event_hooks:
                hook(event)

        return Receipt(
            tx_hash=txh,
            status=status,
            reason=reason,
            gas_used=gas_used,
            block_height=self.height,
            events=tuple(events),
        )

    def _account(self, address: str) -> Account:
        acct = self.accounts.get(address)
        if acct is None:
            acct = Account(address=address)
            self.accounts[address] = acct
        return acct

    # -- queries (read-only, metered for cost reporting) ----------------------

    def query_offers(self, offer_date: date, postal_code: str, voltage: Optional[int] = None):
        """Dictionary-index lookup; gas grows with the bucket, not the market."""
        from anka.contract import get_offers

        with self._lock:
            meter = GasMeter(None, self.config.gas_schedule)
            view = StorageView(self.storage, meter)
            offers = get_offers(view, offer_date, postal_code, voltage)
            return offers, meter.used

    def query_offers_by_diameter(self, buyer_location, diameter_m: float, offer_date: date):
        """Linear on-chain scan over every offer of the date; the costly baseline."""
        from anka.contract import get_offers_by_diameter

        with self._lock:
            meter = GasMeter(None, self.config.gas_schedule)
            view = StorageView(self.storage, meter)
            offers = get_offers_by_diameter(view, buyer_location, diameter_m, offer_date)
            return offers, meter.used

    def get_offer(self, offer_id: int):
        from anka.contract import get_offer

        with self._lock:
            meter = GasMeter(None, self.config.gas_schedule)
            return get_offer(StorageView(self.storage, meter), offer_id)

    def get_profile(self, address: str) -> Optional[dict]:
        from anka.contract import get_profile

        with self._lock:
            meter = GasMeter(None, self.config.gas_schedule)
            return get_profile(StorageView(self.storage, meter), address)

    # -- log persistence and replay -------------------------------------------

    def write_log(self, path: str | Path) -> None:
        with self._lock, open(path, "w") as fh:
            for entry in self.tx_log:
                fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")

    @staticmethod
    def read_log(path: str | Path) -> list[str]:
        """Wire-hex of every logged submission, in order."""
        wires = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    wires.append(json.loads(line)["tx"])
        return wires

    @classmethod
    def replay(cls, config: GenesisConfig, wires: Iterable[str | bytes]) -> "Chain":
        """Re-execute a transaction log on a fresh chain.

        Per-transaction errors become recorded outcomes in the new chain's
        log, exactly as they did originally.
        """
        chain = cls(config)
        for wire in wires:
            raw = bytes.fromhex(wire) if isinstance(wire, str) else wire
            try:
                chain.submit_wire(raw)
            except AnkaError:
                pass  # outcome recorded in tx_log; rejected txs change nothing
        return chain

    def outcome_keys(self) -> list[tuple]:
        with self._lock:
            return [entry.outcome_key() for entry in self.tx_log]
