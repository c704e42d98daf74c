import random
from datetime import timedelta

from hypothesis import given, settings
from hypothesis import strategies as st

from anka import codec
from anka.chain import Chain
from anka.contract import STATUS_ACTIVE, STATUS_CANCELLED, STATUS_SOLD
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
)
from anka.geo import GeoPoint
from support import (
    CHAIN_DATE,
    FUNDS,
    OfferBook,
    Trader,
    fresh_market,
    list_payload,
    make_genesis,
    raw_exec,
)
from anka.keys import generate_keypair


def reverted(receipt, reason):
    assert receipt.status == "reverted", f"expected revert, got {receipt.status}"
    assert receipt.reason == reason
    return True


# -- deploy / register ------------------------------------------------------------


def test_market_requires_deployment():
    kp = generate_keypair(seed=b"solo")
    chain = Chain.from_genesis(make_genesis({kp.address: FUNDS}))
    trader = Trader(kp, chain)
    reverted(trader.send(codec.Register(name="Early")), REVERT_NOT_DEPLOYED)
    reverted(trader.send(list_payload()), REVERT_NOT_DEPLOYED)
    receipt = trader.must(codec.Deploy())
    assert receipt.gas_used == 3_282_000
    assert receipt.events[0].kind == "ContractDeployed"
    reverted(trader.send(codec.Deploy()), REVERT_ALREADY_DEPLOYED)


def test_register_happy_path_and_duplicates(market):
    chain, (alice, _) = market
    reverted(alice.send(codec.Register(name="Again")), REVERT_ALREADY_REGISTERED)
    profile = chain.get_profile(alice.address)
    assert profile == {"address": alice.address, "name": "Trader 0"}


def test_register_gas_and_event():
    kp = generate_keypair(seed=b"solo")
    chain = Chain.from_genesis(make_genesis({kp.address: FUNDS}))
    trader = Trader(kp, chain)
    trader.must(codec.Deploy())
    receipt = trader.must(codec.Register(name="  Padded Name  "))
    assert receipt.gas_used == 50_000
    (event,) = receipt.events
    assert event.kind == "Registered"
    assert event.attrs == {"address": kp.address, "name": "Padded Name"}


def test_register_name_validation():
    kp = generate_keypair(seed=b"names")
    chain = Chain.from_genesis(make_genesis({kp.address: FUNDS}))
    trader = Trader(kp, chain)
    trader.must(codec.Deploy())
    reverted(trader.send(codec.Register(name="")), REVERT_INVALID_NAME)
    reverted(trader.send(codec.Register(name="   ")), REVERT_INVALID_NAME)
    reverted(trader.send(codec.Register(name="x" * 65)), REVERT_INVALID_NAME)
    trader.must(codec.Register(name="x" * 64))


# -- list_offer --------------------------------------------------------------------


def test_list_offer_ids_are_sequential(market):
    chain, (alice, bob) = market
    for expected in range(3):
        receipt = alice.must(list_payload())
        assert receipt.events[0].attrs["offer_id"] == expected
    receipt = bob.must(list_payload())
    assert receipt.events[0].attrs["offer_id"] == 3


def test_list_offer_gas_is_calibrated(market):
    _, (alice, _) = market
    assert alice.must(list_payload()).gas_used == 534_845


def test_list_offer_event_and_stored_record(market):
    chain, (alice, _) = market
    receipt = alice.must(list_payload(postal=" 34450 "))
    (event,) = receipt.events
    assert event.kind == "OfferListed"
    assert event.attrs["postal_code"] == "34450"  # normalized before storing

    offer = chain.get_offer(0)
    assert offer.seller == alice.address
    assert offer.postal_code == "34450"
    assert offer.status == STATUS_ACTIVE
    assert offer.location == GeoPoint(41_205_000, 29_073_000)
    assert offer.buyer is None


def test_list_offer_validation(market):
    _, (alice, _) = market
    reverted(alice.send(list_payload(voltage=11)), REVERT_INVALID_VOLTAGE)
    reverted(alice.send(list_payload(price=0)), REVERT_INVALID_PRICE)
    reverted(alice.send(list_payload(energy_wh=0)), REVERT_INVALID_ENERGY)
    reverted(alice.send(list_payload(postal="!!")), REVERT_INVALID_POSTAL)
    reverted(
        alice.send(list_payload(lat_micro=91_000_000)), REVERT_INVALID_LOCATION
    )
    reverted(
        alice.send(list_payload(offer_date=CHAIN_DATE - timedelta(days=1))),
        REVERT_DATE_IN_PAST,
    )
    reverted(
        alice.send(list_payload(offer_date=CHAIN_DATE + timedelta(days=2))),
        REVERT_DATE_OUT_OF_WINDOW,
    )


def test_list_offer_date_window_boundaries(market):
    _, (alice, _) = market
    assert alice.must(list_payload(offer_date=CHAIN_DATE)).success
    assert alice.must(list_payload(offer_date=CHAIN_DATE + timedelta(days=1))).success


def test_list_offer_requires_registration(market):
    chain, (alice, _) = market
    outsider = Trader(generate_keypair(seed=b"outsider"), chain)
    alice.must(codec.Transfer(to=outsider.address, amount=10**9))
    reverted(outsider.send(list_payload()), REVERT_NOT_REGISTERED)


def test_all_whitelisted_voltages_accepted(market):
    chain, (alice, _) = market
    for voltage in chain.config.voltage_whitelist:
        assert alice.must(list_payload(voltage=voltage)).success


# -- buy_offer ---------------------------------------------------------------------


def test_buy_zero_cut_settlement(market):
    chain, (alice, bob) = market
    price = 777_777
    alice.must(list_payload(price=price))
    seller_before = chain.balance_of(alice.address)
    receipt = bob.must(codec.BuyOffer(offer_id=0))
    assert receipt.gas_used == 72_934
    assert chain.balance_of(alice.address) - seller_before == price  # exactly +price

    offer = chain.get_offer(0)
    assert offer.status == STATUS_SOLD
    assert offer.buyer == bob.address
    (event,) = receipt.events
    assert event.kind == "OfferSold"
    assert event.attrs["price"] == price


def test_buy_removes_offer_from_bucket_keeps_datelist(market):
    chain, (alice, bob) = market
    alice.must(list_payload())
    alice.must(list_payload())
    bob.must(codec.BuyOffer(offer_id=0))

    offers, _ = chain.query_offers(CHAIN_DATE, "34450")
    assert [o.offer_id for o in offers] == [1]
    scanned, _ = chain.query_offers_by_diameter(
        GeoPoint(41_205_000, 29_073_000), 10_000.0, CHAIN_DATE
    )
    assert [o.offer_id for o in scanned] == [1]  # sold offers filtered there too
    assert chain.storage[f"datelist:{CHAIN_DATE.isoformat()}"] == [0, 1]


def test_buy_error_paths(market3):
    chain, (alice, bob, carol) = market3
    alice.must(list_payload())
    reverted(bob.send(codec.BuyOffer(offer_id=99)), REVERT_UNKNOWN_OFFER)
    reverted(alice.send(codec.BuyOffer(offer_id=0)), REVERT_SELF_PURCHASE)
    bob.must(codec.BuyOffer(offer_id=0))
    reverted(carol.send(codec.BuyOffer(offer_id=0)), REVERT_OFFER_NOT_ACTIVE)
    reverted(bob.send(codec.BuyOffer(offer_id=0)), REVERT_OFFER_NOT_ACTIVE)


def test_buy_requires_registration(market):
    chain, (alice, _) = market
    alice.must(list_payload())
    stranger = Trader(generate_keypair(seed=b"stranger"), chain)
    alice.must(codec.Transfer(to=stranger.address, amount=10**10))
    reverted(stranger.send(codec.BuyOffer(offer_id=0)), REVERT_NOT_REGISTERED)


def test_double_sell_excluded_sequentially(market3):
    chain, (alice, bob, carol) = market3
    alice.must(list_payload())
    first = bob.send(codec.BuyOffer(offer_id=0))
    second = carol.send(codec.BuyOffer(offer_id=0))
    assert first.success
    reverted(second, REVERT_OFFER_NOT_ACTIVE)


# -- cancel_offer ------------------------------------------------------------------


def test_cancel_happy_path(market):
    chain, (alice, bob) = market
    alice.must(list_payload())
    receipt = alice.must(codec.CancelOffer(offer_id=0))
    assert receipt.gas_used == 30_000
    assert chain.get_offer(0).status == STATUS_CANCELLED
    offers, _ = chain.query_offers(CHAIN_DATE, "34450")
    assert offers == []
    reverted(bob.send(codec.BuyOffer(offer_id=0)), REVERT_OFFER_NOT_ACTIVE)


def test_cancel_error_paths(market):
    chain, (alice, bob) = market
    alice.must(list_payload())
    reverted(bob.send(codec.CancelOffer(offer_id=0)), REVERT_NOT_SELLER)
    reverted(alice.send(codec.CancelOffer(offer_id=42)), REVERT_UNKNOWN_OFFER)
    bob.must(codec.BuyOffer(offer_id=0))
    reverted(alice.send(codec.CancelOffer(offer_id=0)), REVERT_OFFER_NOT_ACTIVE)


# -- queries ------------------------------------------------------------------------


def test_get_offers_filters_by_voltage_and_normalizes(market):
    chain, (alice, _) = market
    alice.must(list_payload(voltage=9))
    alice.must(list_payload(voltage=12))
    alice.must(list_payload(voltage=24))

    offers, _ = chain.query_offers(CHAIN_DATE, " 34450 ", 12)
    assert [o.offer_id for o in offers] == [1]
    offers, _ = chain.query_offers(CHAIN_DATE, "34450")
    assert [o.offer_id for o in offers] == [0, 1, 2]
    offers, _ = chain.query_offers(CHAIN_DATE, "99999")
    assert offers == []
    offers, _ = chain.query_offers(CHAIN_DATE + timedelta(days=1), "34450")
    assert offers == []


def test_get_offers_gas_is_bucket_local(market):
    chain, (alice, _) = market
    for _ in range(4):
        alice.must(list_payload(postal="34450"))
    for _ in range(37):
        alice.must(list_payload(postal="06420"))

    _, gas_small = chain.query_offers(CHAIN_DATE, "34450")
    _, gas_big = chain.query_offers(CHAIN_DATE, "06420")
    schedule = chain.config.gas_schedule
    per_offer = schedule.storage_read + schedule.iteration
    assert gas_small == schedule.storage_read + 4 * per_offer
    assert gas_big == schedule.storage_read + 37 * per_offer
    _, gas_empty = chain.query_offers(CHAIN_DATE, "NOWHERE")
    assert gas_empty == schedule.storage_read


def test_diameter_scan_gas_covers_whole_date(market):
    chain, (alice, _) = market
    for i in range(10):
        alice.must(list_payload(postal=f"P{i:04d}"))
    alice.must(codec.CancelOffer(offer_id=3))  # still scanned afterwards

    buyer = GeoPoint(41_205_000, 29_073_000)
    offers, gas = chain.query_offers_by_diameter(buyer, 1_000.0, CHAIN_DATE)
    schedule = chain.config.gas_schedule
    assert gas == schedule.storage_read + 10 * (schedule.storage_read + schedule.iteration)
    assert [o.offer_id for o in offers] == [i for i in range(10) if i != 3]


def test_diameter_scan_strictness_and_statuses(market):
    chain, (alice, bob) = market
    base = GeoPoint(41_000_000, 29_000_000)
    near = list_payload(lat_micro=41_001_000, lon_micro=29_000_000)  # ~111 m away
    far = list_payload(lat_micro=41_500_000, lon_micro=29_000_000)  # ~55.6 km away
    alice.must(near)
    alice.must(far)

    got, _ = chain.query_offers_by_diameter(base, 1_000.0, CHAIN_DATE)
    assert [o.offer_id for o in got] == [0]
    got, _ = chain.query_offers_by_diameter(base, 0.0, CHAIN_DATE)
    assert got == []

    import numpy as np

    from anka._kernels import haversine_many

    # Boundary from the same batch kernel (and array shape) the scan runs.
    locs = [GeoPoint(41_001_000, 29_000_000), GeoPoint(41_500_000, 29_000_000)]
    exact = float(
        haversine_many(
            np.array([p.lat for p in locs]), np.array([p.lon for p in locs]), base.lat, base.lon
        )[0]
    )
    got, _ = chain.query_offers_by_diameter(base, exact, CHAIN_DATE)
    assert got == []  # strict inequality

    bob.must(codec.BuyOffer(offer_id=0))
    got, _ = chain.query_offers_by_diameter(base, 100_000.0, CHAIN_DATE)
    assert [o.offer_id for o in got] == [1]


def test_query_date_without_offers_is_cheap_and_empty(market):
    chain, _ = market
    offers, gas = chain.query_offers_by_diameter(GeoPoint(0, 0), 1e7, CHAIN_DATE)
    assert offers == []
    assert gas == chain.config.gas_schedule.storage_read


# -- randomized index equivalence (small; the big one is in acceptance) -------------


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_index_matches_brute_force_oracle(seed):
    rng = random.Random(seed)
    chain, traders = fresh_market(2)
    book = OfferBook()
    postal_codes = [f"A{i:03d}" for i in range(5)]

    for i in range(rng.randrange(5, 40)):
        seller = rng.choice(traders)
        fields = {
            "postal": rng.choice(postal_codes),
            "voltage": rng.choice(chain.config.voltage_whitelist),
            "offer_date": CHAIN_DATE + timedelta(days=rng.randrange(0, 2)),
            "price": rng.randrange(1, 10**6),
        }
        receipt = seller.must(list_payload(**fields))
        book.add(chain.get_offer(receipt.events[0].attrs["offer_id"]))

    # sell or cancel a few
    for offer in list(book.offers):
        action = rng.randrange(3)
        if action == 0:
            buyer = traders[0] if offer.seller != traders[0].address else traders[1]
            buyer.must(codec.BuyOffer(offer_id=offer.offer_id))
        elif action == 1:
            seller = next(t for t in traders if t.address == offer.seller)
            seller.must(codec.CancelOffer(offer_id=offer.offer_id))
    book.offers = [chain.get_offer(o.offer_id) for o in book.offers]

    for offer_date in (CHAIN_DATE, CHAIN_DATE + timedelta(days=1)):
        for postal in postal_codes:
            for voltage in (None, 5, 9, 12, 24, 36, 48):
                got, _ = chain.query_offers(offer_date, postal, voltage)
                assert [o.offer_id for o in got] == book.query(offer_date, postal, voltage)


def test_raw_exec_matches_signed_path_storage(market):
    chain_signed, (alice, _) = market
    alice.must(list_payload())

    chain_raw, traders = fresh_market(2)
    raw_exec(chain_raw, traders[0].address, list_payload())
    assert (
        chain_raw.storage["offer:0"]["postal_code"]
        == chain_signed.storage["offer:0"]["postal_code"]
    )
    assert chain_raw.storage["next_offer_id"] == chain_signed.storage["next_offer_id"]
