"""HTTP node: JSON-RPC 2.0 endpoint at /rpc plus an SSE stream at /events.

The node holds the only chain instance and never holds user keys; clients
sign locally and send finished wire bytes. JSON-RPC error codes:

    -32700  unparseable request, or tx bytes that do not decode
    -32600  not a valid JSON-RPC 2.0 request object
    -32601  unknown method
    -32602  bad method params
    -32000  transaction rejected (reason in error.data)
    -32001  entity not found

/events frames each marketplace event as `id:` (global sequence number),
`event:` (kind) and `data:` (JSON). `from_seq` replays the backlog from a
sequence number; `kinds`, `postal` and `date` filter the stream.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass
from datetime import date
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from anka import codec
from anka.chain import Chain, Event
from anka.errors import CodecError, PostalCodeError, TxRejected
from anka.geo import GeoPoint, normalize_postal

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
TX_REJECTED = -32000
NOT_FOUND = -32001

HEARTBEAT_SECONDS = 15.0


class _RpcFault(Exception):
    def __init__(self, code: int, message: str, data=None):
        self.code = code
        self.message = message
        self.data = data
        super().__init__(message)


@dataclass
class NodeConfig:
    host: str = "127.0.0.1"
    port: int = 8545
    tx_log_path: Optional[str] = None
    verbose: bool = False

    @classmethod
    def from_listen(cls, listen: str, **kwargs) -> "NodeConfig":
        host, _, port = listen.rpartition(":")
        return cls(host=host or "127.0.0.1", port=int(port), **kwargs)


def _parse_date(raw) -> date:
    try:
        return date.fromisoformat(str(raw))
    except ValueError as exc:
        raise _RpcFault(INVALID_PARAMS, f"bad date: {raw!r}") from exc


def _require(params: dict, key: str):
    if key not in params:
        raise _RpcFault(INVALID_PARAMS, f"missing param: {key}")
    return params[key]


def _as_int(params: dict, key: str) -> int:
    value = _require(params, key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise _RpcFault(INVALID_PARAMS, f"param {key} must be an integer")
    return value


class RpcMethods:
    """Method table shared by the HTTP handler and in-process tests."""

    def __init__(self, node: "Node"):
        self.node = node
        self.chain = node.chain
        self._fee_table: Optional[dict] = None  # schedule is frozen at genesis

    def dispatch(self, method: str, params: dict):
        handler = getattr(self, "rpc_" + method, None)
        if handler is None or not method.isidentifier():
            raise _RpcFault(METHOD_NOT_FOUND, f"unknown method: {method}")
        if not isinstance(params, dict):
            raise _RpcFault(INVALID_PARAMS, "params must be an object")
        return handler(params)

    def rpc_send_transaction(self, params: dict):
        wire_hex = str(_require(params, "wire"))
        if wire_hex.startswith(("0x", "0X")):
            wire_hex = wire_hex[2:]
        try:
            wire = bytes.fromhex(wire_hex)
            tx = codec.decode_tx(wire)
        except (ValueError, CodecError) as exc:
            raise _RpcFault(PARSE_ERROR, f"undecodable transaction: {exc}") from exc
        try:
            receipt = self.chain.submit(tx)
        except TxRejected as exc:
            raise _RpcFault(
                TX_REJECTED, str(exc), data={"reason": exc.reason, "detail": exc.detail}
            ) from exc
        finally:
            self.node.flush_log_tail()
        return receipt.to_dict()

    def rpc_get_offers(self, params: dict):
        offer_date = _parse_date(_require(params, "date"))
        voltage = params.get("voltage")
        if voltage is not None and (isinstance(voltage, bool) or not isinstance(voltage, int)):
            raise _RpcFault(INVALID_PARAMS, "param voltage must be an integer")
        try:
            offers, gas = self.chain.query_offers(
                offer_date, str(_require(params, "postal_code")), voltage
            )
        except PostalCodeError as exc:
            raise _RpcFault(INVALID_PARAMS, str(exc)) from exc
        return {"offers": [o.to_record() for o in offers], "gas_used": gas}

    def rpc_get_offers_by_diameter(self, params: dict):
        try:
            buyer = GeoPoint(_as_int(params, "lat_micro"), _as_int(params, "lon_micro"))
        except ValueError as exc:
            raise _RpcFault(INVALID_PARAMS, str(exc)) from exc
        diameter = _require(params, "diameter_m")
        if isinstance(diameter, bool) or not isinstance(diameter, (int, float)):
            raise _RpcFault(INVALID_PARAMS, "param diameter_m must be a number")
        if diameter < 0:
            raise _RpcFault(INVALID_PARAMS, "diameter_m must be non-negative")
        offer_date = _parse_date(_require(params, "date"))
        offers, gas = self.chain.query_offers_by_diameter(buyer, float(diameter), offer_date)
        return {"offers": [o.to_record() for o in offers], "gas_used": gas}

    def rpc_get_offer(self, params: dict):
        offer = self.chain.get_offer(_as_int(params, "offer_id"))
        if offer is None:
            raise _RpcFault(NOT_FOUND, f"no offer {params['offer_id']}")
        return offer.to_record()

    def rpc_get_account(self, params: dict):
        address = str(_require(params, "address"))
        return {
            "address": address,
            "balance": self.chain.balance_of(address),
            "nonce": self.chain.nonce_of(address),
        }

    def rpc_get_profile(self, params: dict):
        profile = self.chain.get_profile(str(_require(params, "address")))
        if profile is None:
            raise _RpcFault(NOT_FOUND, "address not registered")
        return profile

    def rpc_state_hash(self, params: dict):
        return {"state_hash": self.chain.state_hash(), "height": self.chain.height}

    def rpc_chain_info(self, params: dict):
        cfg = self.chain.config
        return {
            "height": self.chain.height,
            "state_hash": self.chain.state_hash(),
            "chain_date": cfg.chain_date.isoformat(),
            "date_window_days": cfg.date_window_days,
            "voltage_whitelist": list(cfg.voltage_whitelist),
            "gas_price": cfg.gas_price,
            "usd_per_gwei": cfg.usd_per_gwei,
            "fee_sink": self.chain.fee_sink,
            "total_supply": self.chain.total_supply(),
            "last_seq": self.chain.last_seq,
        }

    def rpc_fee_table(self, params: dict):
        """Per-operation fees under this chain's schedule, measured not guessed.

        Runs one of each operation on a throwaway chain configured like this
        one, so UIs can quote fees without reimplementing gas accounting.
        """
        if self._fee_table is None:
            from decimal import Decimal

            from anka.bench import CostParameters, measure_operation_costs

            cfg = self.chain.config
            report = measure_operation_costs(
                CostParameters(
                    usd_per_gwei=Decimal(cfg.usd_per_gwei), gas_price=cfg.gas_price
                ),
                gas_schedule=cfg.gas_schedule,
            )
            self._fee_table = {
                "gas_price": cfg.gas_price,
                "usd_per_gwei": cfg.usd_per_gwei,
                "rows": [
                    {
                        "operation": r.operation,
                        "gas_used": r.gas_used,
                        "fee_gwei": r.fee_gwei,
                        "fee_usd": str(r.fee_usd),
                        "fee_usd_cents": str(r.fee_usd_cents),
                    }
                    for r in report.rows
                ],
            }
        return self._fee_table


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "anka-node"

    # set by Node when the handler class is bound
    node: "Node"

    def log_message(self, fmt, *args):
        if self.node.config.verbose:
            super().log_message(fmt, *args)

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):  # CORS preflight for the browser client
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self):
        if urlparse(self.path).path != "/rpc":
            self._send_json({"error": "not found"}, status=404)
            return
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length)
        req_id = None
        try:
            try:
                request = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise _RpcFault(PARSE_ERROR, f"parse error: {exc}") from exc
            if isinstance(request, dict):
                req_id = request.get("id")
            if not isinstance(request, dict) or request.get("jsonrpc") != "2.0":
                raise _RpcFault(INVALID_REQUEST, "expected a JSON-RPC 2.0 request object")
            method = request.get("method")
            if not isinstance(method, str):
                raise _RpcFault(INVALID_REQUEST, "method must be a string")
            result = self.node.methods.dispatch(method, request.get("params") or {})
        except _RpcFault as fault:
            error = {"code": fault.code, "message": fault.message}
            if fault.data is not None:
                error["data"] = fault.data
            self._send_json({"jsonrpc": "2.0", "id": req_id, "error": error})
            return
        self._send_json({"jsonrpc": "2.0", "id": req_id, "result": result})

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/events":
            self._serve_events(parse_qs(url.query))
        elif url.path == "/healthz":
            self._send_json({"ok": True, "height": self.node.chain.height})
        else:
            self._send_json({"error": "not found"}, status=404)

    # -- SSE -------------------------------------------------------------

    def _serve_events(self, query: dict) -> None:
        try:
            from_seq = int(query.get("from_seq", ["0"])[0])
        except ValueError:
            self._send_json({"error": "from_seq must be an integer"}, status=400)
            return
        kinds = set()
        for chunk in query.get("kinds", []):
            kinds.update(k.strip() for k in chunk.split(",") if k.strip())
        postal = query.get("postal", [None])[0]
        if postal is not None:
            try:
                postal = normalize_postal(postal)
            except PostalCodeError:
                self._send_json({"error": "bad postal filter"}, status=400)
                return
        date_filter = query.get("date", [None])[0]

        def wants(event: Event) -> bool:
            if kinds and event.kind not in kinds:
                return False
            if postal is not None and event.attrs.get("postal_code") != postal:
                return False
            if date_filter is not None and event.attrs.get("offer_date") != date_filter:
                return False
            return True

        inbox: "queue.Queue[Event]" = queue.Queue()
        backlog, unsubscribe = self.node.chain.subscribe(inbox.put, from_seq=from_seq)

        self.close_connection = True  # the stream is the rest of this socket
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Connection", "keep-alive")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()

        try:
            for event in backlog:
                if wants(event):
                    self._write_event(event)
            while not self.node.stopping.is_set():
                try:
                    event = inbox.get(timeout=HEARTBEAT_SECONDS)
                except queue.Empty:
                    self.wfile.write(b": keep-alive\n\n")
                    self.wfile.flush()
                    continue
                if wants(event):
                    self._write_event(event)
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            unsubscribe()

    def _write_event(self, event: Event) -> None:
        data = json.dumps(event.to_dict(), sort_keys=True)
        frame = f"id: {event.seq}\nevent: {event.kind}\ndata: {data}\n\n"
        self.wfile.write(frame.encode())
        self.wfile.flush()


class Node:
    """Owns the chain, the HTTP server and optional tx-log persistence."""

    def __init__(self, chain: Chain, config: NodeConfig):
        self.chain = chain
        self.config = config
        self.methods = RpcMethods(self)
        self.stopping = threading.Event()
        self._flushed = 0
        self._log_lock = threading.Lock()

        handler = type("BoundHandler", (_Handler,), {"node": self})
        self.httpd = ThreadingHTTPServer((config.host, config.port), handler)
        self.httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None
        if config.tx_log_path:
            Path(config.tx_log_path).parent.mkdir(parents=True, exist_ok=True)
            open(config.tx_log_path, "a").close()
            self.flush_log_tail()

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.config.host}:{self.port}"

    def flush_log_tail(self) -> None:
        """Append any not-yet-persisted log entries to the tx log file."""
        if not self.config.tx_log_path:
            return
        with self._log_lock:
            entries = self.chain.tx_log[self._flushed :]
            if not entries:
                return
            with open(self.config.tx_log_path, "a") as fh:
                for entry in entries:
                    fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
            self._flushed += len(entries)

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def stop(self) -> None:
        self.stopping.set()
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
