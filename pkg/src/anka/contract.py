"""Marketplace contract: profiles, energy offers, postal-bucket index.

State lives in the chain's flat key/value storage:

    deployed                      -> bool
    profile:{address}             -> {"name": str}
    next_offer_id                 -> int
    offer:{id}                    -> offer record dict
    bucket:{date}:{postal}        -> [active offer ids for that date+area]
    datelist:{date}               -> [every offer id listed for that date]

Buckets hold only *active* ids (sold and cancelled offers are removed), so a
buyer query reads one bucket and its offers. The per-date list keeps every id
and backs the linear scan baseline that prices out the bucket design.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Optional

from anka.chain import ExecutionContext, StorageView
from anka.codec import BuyOffer, CancelOffer, Deploy, ListOffer, Payload, Register
from anka.errors import (
    REVERT_ALREADY_DEPLOYED,
    REVERT_ALREADY_REGISTERED,
    REVERT_DATE_IN_PAST,
    REVERT_DATE_OUT_OF_WINDOW,
    REVERT_INVALID_ENERGY,
    REVERT_INVALID_LOCATION,
    REVERT_INVALID_NAME,
    REVERT_INVALID_POSTAL,
    REVERT_INVALID_PRICE,
    REVERT_INVALID_VOLTAGE,
    REVERT_NOT_DEPLOYED,
    REVERT_NOT_REGISTERED,
    REVERT_NOT_SELLER,
    REVERT_OFFER_NOT_ACTIVE,
    REVERT_SELF_PURCHASE,
    REVERT_UNKNOWN_OFFER,
    ContractRevert,
    PostalCodeError,
)
from anka.geo import GeoPoint, filter_by_diameter, normalize_postal

STATUS_ACTIVE = "active"
STATUS_SOLD = "sold"
STATUS_CANCELLED = "cancelled"

MAX_NAME_LEN = 64

KEY_DEPLOYED = "deployed"
KEY_NEXT_OFFER_ID = "next_offer_id"


def profile_key(address: str) -> str:
    return f"profile:{address}"


def offer_key(offer_id: int) -> str:
    return f"offer:{offer_id}"


def bucket_key(offer_date: date, postal_code: str) -> str:
    return f"bucket:{offer_date.isoformat()}:{postal_code}"


def datelist_key(offer_date: date) -> str:
    return f"datelist:{offer_date.isoformat()}"


@dataclass(frozen=True)
class EnergyOffer:
    """One sell offer for an amount of energy on a delivery date."""

    offer_id: int
    seller: str
    energy_wh: int
    voltage: int
    price: int
    postal_code: str
    location: GeoPoint
    offer_date: date
    status: str = STATUS_ACTIVE
    buyer: Optional[str] = None

    def to_record(self) -> dict:
        return {
            "offer_id": self.offer_id,
            "seller": self.seller,
            "energy_wh": self.energy_wh,
            "voltage": self.voltage,
            "price": self.price,
            "postal_code": self.postal_code,
            "lat_micro": self.location.lat_micro,
            "lon_micro": self.location.lon_micro,
            "offer_date": self.offer_date.isoformat(),
            "status": self.status,
            "buyer": self.buyer,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EnergyOffer":
        return cls(
            offer_id=rec["offer_id"],
            seller=rec["seller"],
            energy_wh=rec["energy_wh"],
            voltage=rec["voltage"],
            price=rec["price"],
            postal_code=rec["postal_code"],
            location=GeoPoint(rec["lat_micro"], rec["lon_micro"]),
            offer_date=date.fromisoformat(rec["offer_date"]),
            status=rec["status"],
            buyer=rec.get("buyer"),
        )


# -- transaction handlers ------------------------------------------------------


def execute(ctx: ExecutionContext, payload: Payload) -> None:
    if isinstance(payload, Deploy):
        _deploy(ctx)
        return
    _require_deployed(ctx)
    if isinstance(payload, Register):
        _register(ctx, payload)
    elif isinstance(payload, ListOffer):
        _list_offer(ctx, payload)
    elif isinstance(payload, BuyOffer):
        _buy_offer(ctx, payload)
    elif isinstance(payload, CancelOffer):
        _cancel_offer(ctx, payload)
    else:  # pragma: no cover - the codec only produces the kinds above
        raise ContractRevert(REVERT_UNKNOWN_OFFER, f"unhandled payload {payload!r}")


def _require_deployed(ctx: ExecutionContext) -> None:
    if not ctx.storage.get(KEY_DEPLOYED, False):
        raise ContractRevert(REVERT_NOT_DEPLOYED)


def _deploy(ctx: ExecutionContext) -> None:
    if ctx.storage.get(KEY_DEPLOYED, False):
        raise ContractRevert(REVERT_ALREADY_DEPLOYED)
    ctx.storage.set(KEY_DEPLOYED, True)
    ctx.emit("ContractDeployed", deployer=ctx.caller)


def _register(ctx: ExecutionContext, payload: Register) -> None:
    if ctx.storage.get(profile_key(ctx.caller)) is not None:
        raise ContractRevert(REVERT_ALREADY_REGISTERED)
    name = payload.name.strip()
    if not name or len(name) > MAX_NAME_LEN:
        raise ContractRevert(REVERT_INVALID_NAME)
    ctx.storage.set(profile_key(ctx.caller), {"name": name})
    ctx.emit("Registered", address=ctx.caller, name=name)


def _list_offer(ctx: ExecutionContext, payload: ListOffer) -> None:
    if ctx.storage.get(profile_key(ctx.caller)) is None:
        raise ContractRevert(REVERT_NOT_REGISTERED)
    if payload.voltage not in ctx.config.voltage_whitelist:
        raise ContractRevert(REVERT_INVALID_VOLTAGE, f"voltage {payload.voltage}")
    if payload.price <= 0:
        raise ContractRevert(REVERT_INVALID_PRICE)
    if payload.energy_wh <= 0:
        raise ContractRevert(REVERT_INVALID_ENERGY)
    try:
        postal = normalize_postal(payload.postal_code)
    except PostalCodeError as exc:
        raise ContractRevert(REVERT_INVALID_POSTAL, str(exc)) from exc
    try:
        location = GeoPoint(payload.lat_micro, payload.lon_micro)
    except ValueError as exc:
        raise ContractRevert(REVERT_INVALID_LOCATION, str(exc)) from exc
    if payload.offer_date < ctx.chain_date:
        raise ContractRevert(REVERT_DATE_IN_PAST, payload.offer_date.isoformat())
    last_allowed = ctx.chain_date + timedelta(days=ctx.config.date_window_days - 1)
    if payload.offer_date > last_allowed:
        raise ContractRevert(REVERT_DATE_OUT_OF_WINDOW, payload.offer_date.isoformat())

    offer_id = ctx.storage.get(KEY_NEXT_OFFER_ID, 0)
    ctx.storage.set(KEY_NEXT_OFFER_ID, offer_id + 1)

    offer = EnergyOffer(
        offer_id=offer_id,
        seller=ctx.caller,
        energy_wh=payload.energy_wh,
        voltage=payload.voltage,
        price=payload.price,
        postal_code=postal,
        location=location,
        offer_date=payload.offer_date,
    )
    ctx.storage.set(offer_key(offer_id), offer.to_record())

    bkey = bucket_key(payload.offer_date, postal)
    bucket = ctx.storage.get(bkey, [])
    bucket.append(offer_id)
    ctx.storage.set(bkey, bucket)

    dkey = datelist_key(payload.offer_date)
    datelist = ctx.storage.get(dkey, [])
    datelist.append(offer_id)
    ctx.storage.set(dkey, datelist)

    ctx.emit(
        "OfferListed",
        offer_id=offer_id,
        seller=ctx.caller,
        energy_wh=payload.energy_wh,
        voltage=payload.voltage,
        price=payload.price,
        postal_code=postal,
        lat_micro=location.lat_micro,
        lon_micro=location.lon_micro,
        offer_date=payload.offer_date.isoformat(),
    )


def _buy_offer(ctx: ExecutionContext, payload: BuyOffer) -> None:
    if ctx.storage.get(profile_key(ctx.caller)) is None:
        raise ContractRevert(REVERT_NOT_REGISTERED)
    rec = ctx.storage.get(offer_key(payload.offer_id))
    if rec is None:
        raise ContractRevert(REVERT_UNKNOWN_OFFER, f"offer {payload.offer_id}")
    offer = EnergyOffer.from_record(rec)
    if offer.status != STATUS_ACTIVE:
        raise ContractRevert(REVERT_OFFER_NOT_ACTIVE, offer.status)
    if offer.seller == ctx.caller:
        raise ContractRevert(REVERT_SELF_PURCHASE)

    # Settlement is the whole completion step: buyer pays seller the asked
    # price, nothing is escrowed and nothing is cut for an intermediary.
    ctx.transfer_value(ctx.caller, offer.seller, offer.price)

    rec["status"] = STATUS_SOLD
    rec["buyer"] = ctx.caller
    ctx.storage.set(offer_key(payload.offer_id), rec)

    bkey = bucket_key(offer.offer_date, offer.postal_code)
    bucket = ctx.storage.get(bkey, [])
    bucket = [oid for oid in bucket if oid != payload.offer_id]
    ctx.storage.set(bkey, bucket)

    ctx.emit(
        "OfferSold",
        offer_id=payload.offer_id,
        seller=offer.seller,
        buyer=ctx.caller,
        price=offer.price,
        postal_code=offer.postal_code,
        offer_date=offer.offer_date.isoformat(),
    )


def _cancel_offer(ctx: ExecutionContext, payload: CancelOffer) -> None:
    rec = ctx.storage.get(offer_key(payload.offer_id))
    if rec is None:
        raise ContractRevert(REVERT_UNKNOWN_OFFER, f"offer {payload.offer_id}")
    offer = EnergyOffer.from_record(rec)
    if offer.seller != ctx.caller:
        raise ContractRevert(REVERT_NOT_SELLER)
    if offer.status != STATUS_ACTIVE:
        raise ContractRevert(REVERT_OFFER_NOT_ACTIVE, offer.status)

    rec["status"] = STATUS_CANCELLED
    ctx.storage.set(offer_key(payload.offer_id), rec)

    bkey = bucket_key(offer.offer_date, offer.postal_code)
    bucket = ctx.storage.get(bkey, [])
    bucket = [oid for oid in bucket if oid != payload.offer_id]
    ctx.storage.set(bkey, bucket)

    ctx.emit(
        "OfferCancelled",
        offer_id=payload.offer_id,
        seller=ctx.caller,
        postal_code=offer.postal_code,
        offer_date=offer.offer_date.isoformat(),
    )


# -- read-only queries ---------------------------------------------------------


def get_offers(
    view: StorageView,
    offer_date: date,
    postal_code: str,
    voltage: Optional[int] = None,
) -> list[EnergyOffer]:
    """Active offers for a date and postal area, optionally one voltage class.

    Cost: one bucket read plus one read and one loop step per offer in the
    bucket, independent of how many offers exist elsewhere.
    """
    postal = normalize_postal(postal_code)
    offers = []
    for oid in view.get(bucket_key(offer_date, postal), []):
        view.meter.charge_iteration()
        offer = EnergyOffer.from_record(view.get(offer_key(oid)))
        if voltage is not None and offer.voltage != voltage:
            continue
        offers.append(offer)
    return offers


def get_offers_by_diameter(
    view: StorageView,
    buyer_location: GeoPoint,
    diameter_m: float,
    offer_date: date,
) -> list[EnergyOffer]:
    """Active offers within a search diameter of the buyer, by linear scan.

    Walks every offer listed for the date (whatever its status or area) and
    keeps active ones strictly closer than `diameter_m`. Cost grows with the
    whole day's market; this is the baseline `get_offers` exists to avoid.

    The distance check delegates to the same batch filter clients run
    locally, so both sides are the one implementation and always agree.
    """
    if diameter_m < 0:
        raise ValueError("diameter must be non-negative")
    candidates = []
    for oid in view.get(datelist_key(offer_date), []):
        view.meter.charge_iteration()
        offer = EnergyOffer.from_record(view.get(offer_key(oid)))
        if offer.status == STATUS_ACTIVE:
            candidates.append(offer)
    return filter_by_diameter(buyer_location, diameter_m, candidates)


def get_offer(view: StorageView, offer_id: int) -> Optional[EnergyOffer]:
    rec = view.get(offer_key(offer_id))
    return EnergyOffer.from_record(rec) if rec is not None else None


def get_profile(view: StorageView, address: str) -> Optional[dict]:
    rec = view.get(profile_key(address))
    if rec is None:
        return None
    return {"address": address, "name": rec["name"]}
