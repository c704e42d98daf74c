import json
import threading
import time

import pytest
import requests

from anka import codec
from anka.client import NodeClient
from anka.errors import RpcError, TransportError
from anka.geo import GeoPoint
from support import CHAIN_DATE, list_payload


def rpc_raw(node, body):
    return requests.post(f"{node.url}/rpc", data=body, timeout=5)


def rpc(node, method, params=None, id_=1):
    payload = {"jsonrpc": "2.0", "id": id_, "method": method}
    if params is not None:
        payload["params"] = params
    return rpc_raw(node, json.dumps(payload)).json()


# -- JSON-RPC envelope ---------------------------------------------------------------


def test_send_transaction_returns_receipt(node_market):
    node, chain, (alice, _) = node_market
    client = NodeClient(node.url)
    receipt = client.send_transaction(alice.tx(list_payload()))
    alice.nonce += 1
    assert receipt["status"] == "success"
    assert receipt["gas_used"] == 534_845
    assert receipt["events"][0]["kind"] == "OfferListed"
    assert chain.get_offer(0) is not None


def test_parse_error_on_garbage_json(node_market):
    node, _, _ = node_market
    reply = rpc_raw(node, b"{not json").json()
    assert reply["error"]["code"] == -32700
    assert reply["id"] is None


def test_parse_error_on_undecodable_tx(node_market):
    node, _, _ = node_market
    reply = rpc(node, "send_transaction", {"wire": "0xdeadbeef"})
    assert reply["error"]["code"] == -32700
    reply = rpc(node, "send_transaction", {"wire": "zz-not-hex"})
    assert reply["error"]["code"] == -32700


def test_invalid_request_shapes(node_market):
    node, _, _ = node_market
    reply = rpc_raw(node, json.dumps(["not", "an", "object"])).json()
    assert reply["error"]["code"] == -32600
    reply = rpc_raw(node, json.dumps({"id": 4, "method": "state_hash"})).json()
    assert reply["error"]["code"] == -32600  # missing jsonrpc field
    assert reply["id"] == 4


def test_unknown_method(node_market):
    node, _, _ = node_market
    reply = rpc(node, "no_such_method")
    assert reply["error"]["code"] == -32601


def test_bad_params(node_market):
    node, _, _ = node_market
    reply = rpc(node, "get_offers", {"postal_code": "34450"})  # missing date
    assert reply["error"]["code"] == -32602
    reply = rpc(node, "get_offers", {"date": "not-a-date", "postal_code": "34450"})
    assert reply["error"]["code"] == -32602
    reply = rpc(node, "get_offer", {"offer_id": "zero"})
    assert reply["error"]["code"] == -32602
    reply = rpc(node, "send_transaction", {})  # missing wire
    assert reply["error"]["code"] == -32602


def test_rejected_transaction_maps_to_32000(node_market):
    node, _, (alice, _) = node_market
    tx = alice.tx(list_payload(), nonce=99)
    reply = rpc(node, "send_transaction", {"wire": tx.wire.hex()})
    assert reply["error"]["code"] == -32000
    assert reply["error"]["data"]["reason"] == "BadNonce"


def test_not_found_maps_to_32001(node_market):
    node, _, _ = node_market
    reply = rpc(node, "get_offer", {"offer_id": 7})
    assert reply["error"]["code"] == -32001
    reply = rpc(node, "get_profile", {"address": "0x" + "ab" * 20})
    assert reply["error"]["code"] == -32001


def test_get_account_defaults_to_zero(node_market):
    node, _, _ = node_market
    client = NodeClient(node.url)
    account = client.get_account("0x" + "00" * 20)
    assert account == {"address": "0x" + "00" * 20, "balance": 0, "nonce": 0}


def test_query_parity_with_chain(node_market):
    node, chain, (alice, _) = node_market
    client = NodeClient(node.url)
    for voltage in (9, 12, 24):
        client.send_transaction(alice.tx(list_payload(voltage=voltage)))
        alice.nonce += 1

    via_http = client.get_offers(CHAIN_DATE.isoformat(), "34450", voltage=12)
    direct, gas = chain.query_offers(CHAIN_DATE, "34450", 12)
    assert [o["offer_id"] for o in via_http["offers"]] == [o.offer_id for o in direct]
    assert via_http["gas_used"] == gas

    scan = client.get_offers_by_diameter(
        41_205_000, 29_073_000, 5_000.0, CHAIN_DATE.isoformat()
    )
    direct_scan, scan_gas = chain.query_offers_by_diameter(
        GeoPoint(41_205_000, 29_073_000), 5_000.0, CHAIN_DATE
    )
    assert [o["offer_id"] for o in scan["offers"]] == [o.offer_id for o in direct_scan]
    assert scan["gas_used"] == scan_gas


def test_chain_info_and_state_hash(node_market):
    node, chain, _ = node_market
    client = NodeClient(node.url)
    info = client.chain_info()
    assert info["height"] == chain.height
    assert info["state_hash"] == chain.state_hash()
    assert info["chain_date"] == CHAIN_DATE.isoformat()
    assert info["gas_price"] == 1
    assert list(info["voltage_whitelist"]) == [5, 9, 12, 24, 36, 48]
    assert client.state_hash() == chain.state_hash()


def test_fee_table_quotes_measured_fees(node_market):
    node, _, _ = node_market
    table = rpc(node, "fee_table")["result"]
    assert table["gas_price"] == 1
    assert table["usd_per_gwei"] == "0.00000164534"
    by_op = {row["operation"]: row for row in table["rows"]}
    assert by_op["deploy"]["fee_usd_cents"] == "5.40"
    assert by_op["list_offer"]["fee_usd_cents"] == "0.88"
    assert by_op["list_offer"]["gas_used"] == 534_845
    assert by_op["buy_offer"]["fee_usd_cents"] == "0.12"
    assert by_op["selling_deduction"]["fee_gwei"] == 0
    assert rpc(node, "fee_table")["result"] == table  # stable across calls


def test_healthz_and_unknown_path(node_market):
    node, _, _ = node_market
    health = requests.get(f"{node.url}/healthz", timeout=5)
    assert health.status_code == 200
    assert health.json()["ok"] is True
    missing = requests.get(f"{node.url}/nope", timeout=5)
    assert missing.status_code == 404


def test_cors_headers_present(node_market):
    node, _, _ = node_market
    reply = rpc_raw(node, json.dumps({"jsonrpc": "2.0", "id": 1, "method": "state_hash"}))
    assert reply.headers["Access-Control-Allow-Origin"] == "*"
    preflight = requests.options(f"{node.url}/rpc", timeout=5)
    assert preflight.status_code == 204
    assert "POST" in preflight.headers["Access-Control-Allow-Methods"]


def test_client_error_mapping(node_market):
    node, _, _ = node_market
    client = NodeClient(node.url)
    with pytest.raises(RpcError) as excinfo:
        client.get_offer(1234)
    assert excinfo.value.code == -32001
    closed = NodeClient("http://127.0.0.1:9", timeout=2.0)  # nothing listens there
    with pytest.raises(TransportError):
        closed.chain_info()


# -- SSE event stream ----------------------------------------------------------------


def open_stream(node, **params):
    return requests.get(
        f"{node.url}/events", params=params, stream=True, timeout=(5, 30)
    )


def read_sse_events(response, want: int):
    """Collect `want` SSE events (dicts of frame fields) from a live response."""
    events = []
    current: dict[str, str] = {}
    for line in response.iter_lines(chunk_size=1, decode_unicode=True):
        if line is None:
            continue
        if line == "":
            if "data" in current:
                events.append(current)
                if len(events) >= want:
                    break
            current = {}
        elif line.startswith(":"):
            continue
        elif ":" in line:
            key, _, value = line.partition(":")
            current[key.strip()] = value.strip()
    return events


def test_sse_backlog_replay(node_market):
    node, chain, (alice, _) = node_market
    alice.must(list_payload())
    alice.must(list_payload())

    response = open_stream(node, from_seq=0)
    try:
        events = read_sse_events(response, want=5)
    finally:
        response.close()
    kinds = [e["event"] for e in events]
    assert kinds == ["ContractDeployed", "Registered", "Registered", "OfferListed", "OfferListed"]
    assert [int(e["id"]) for e in events] == [1, 2, 3, 4, 5]  # seqs are 1-based
    payload = json.loads(events[-1]["data"])
    assert payload["kind"] == "OfferListed"
    assert payload["postal_code"] == "34450"


def test_sse_live_events_arrive_in_order(node_market):
    node, chain, (alice, _) = node_market
    response = open_stream(node, from_seq=chain.last_seq + 1)  # skip the backlog
    collected = []
    done = threading.Event()

    def consume():
        collected.extend(read_sse_events(response, want=50))
        done.set()

    thread = threading.Thread(target=consume, daemon=True)
    thread.start()
    time.sleep(0.2)  # let the subscriber attach
    for i in range(50):
        alice.must(list_payload(price=1_000 + i))
    assert done.wait(timeout=15), "did not receive 50 events in time"
    response.close()
    thread.join(timeout=5)

    assert len(collected) == 50
    seqs = [int(e["id"]) for e in collected]
    assert seqs == sorted(seqs)
    prices = [json.loads(e["data"])["price"] for e in collected]
    assert prices == [1_000 + i for i in range(50)]


def test_sse_filters(node_market):
    node, chain, (alice, bob) = node_market
    alice.must(list_payload(postal="11111"))
    alice.must(list_payload(postal="22222"))
    bob.must(codec.BuyOffer(offer_id=0))

    response = open_stream(node, from_seq=0, kinds="OfferListed", postal="11111")
    try:
        events = read_sse_events(response, want=1)
    finally:
        response.close()
    assert len(events) == 1
    data = json.loads(events[0]["data"])
    assert data["kind"] == "OfferListed"
    assert data["postal_code"] == "11111"


def test_sse_multiple_subscribers(node_market):
    node, chain, (alice, _) = node_market
    live = chain.last_seq + 1
    streams = [open_stream(node, from_seq=live) for _ in range(3)]
    results: list[list] = [[] for _ in streams]
    threads = []
    for i, stream in enumerate(streams):
        thread = threading.Thread(
            target=lambda i=i, s=stream: results[i].extend(read_sse_events(s, want=4)),
            daemon=True,
        )
        thread.start()
        threads.append(thread)
    time.sleep(0.2)
    for _ in range(4):
        alice.must(list_payload())
    for thread in threads:
        thread.join(timeout=10)
    for stream in streams:
        stream.close()
    for got in results:
        assert [e["event"] for e in got] == ["OfferListed"] * 4
