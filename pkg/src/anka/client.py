"""HTTP client for a running node: JSON-RPC calls and the SSE event stream."""

from __future__ import annotations

import json
import time
from typing import Iterator, Optional

import requests

from anka import codec
from anka.codec import SignedTransaction
from anka.errors import RpcError, TransportError

DEFAULT_NODE_URL = "http://127.0.0.1:8545"


class NodeClient:
    def __init__(self, url: str = DEFAULT_NODE_URL, timeout: float = 10.0):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()
        self._next_id = 0

    def rpc(self, method: str, params: Optional[dict] = None):
        self._next_id += 1
        request = {
            "jsonrpc": "2.0",
            "id": self._next_id,
            "method": method,
            "params": params or {},
        }
        try:
            resp = self._session.post(self.url + "/rpc", json=request, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"cannot reach node at {self.url}: {exc}") from exc
        try:
            body = resp.json()
        except ValueError as exc:
            raise TransportError(f"non-JSON response from node (HTTP {resp.status_code})") from exc
        if "error" in body:
            err = body["error"]
            raise RpcError(int(err.get("code", 0)), str(err.get("message", "")))
        return body.get("result")

    # -- convenience wrappers -------------------------------------------------

    def send_transaction(self, tx: SignedTransaction | bytes | str) -> dict:
        if isinstance(tx, SignedTransaction):
            wire_hex = codec.encode_tx(tx).hex()
        elif isinstance(tx, bytes):
            wire_hex = tx.hex()
        else:
            wire_hex = tx[2:] if tx.startswith(("0x", "0X")) else tx
        return self.rpc("send_transaction", {"wire": "0x" + wire_hex})

    def get_account(self, address: str) -> dict:
        return self.rpc("get_account", {"address": address})

    def get_profile(self, address: str) -> dict:
        return self.rpc("get_profile", {"address": address})

    def get_offer(self, offer_id: int) -> dict:
        return self.rpc("get_offer", {"offer_id": offer_id})

    def get_offers(self, date: str, postal_code: str, voltage: Optional[int] = None) -> dict:
        params = {"date": date, "postal_code": postal_code}
        if voltage is not None:
            params["voltage"] = voltage
        return self.rpc("get_offers", params)

    def get_offers_by_diameter(
        self, lat_micro: int, lon_micro: int, diameter_m: float, date: str
    ) -> dict:
        return self.rpc(
            "get_offers_by_diameter",
            {
                "lat_micro": lat_micro,
                "lon_micro": lon_micro,
                "diameter_m": diameter_m,
                "date": date,
            },
        )

    def chain_info(self) -> dict:
        return self.rpc("chain_info")

    def state_hash(self) -> str:
        return self.rpc("state_hash")["state_hash"]

    def wait_ready(self, timeout: float = 10.0) -> None:
        deadline = time.monotonic() + timeout
        last_exc: Exception = TransportError("node never became ready")
        while time.monotonic() < deadline:
            try:
                resp = self._session.get(self.url + "/healthz", timeout=1.0)
                if resp.ok:
                    return
            except requests.RequestException as exc:
                last_exc = exc
            time.sleep(0.05)
        raise TransportError(f"node at {self.url} not ready: {last_exc}")

    # -- events ----------------------------------------------------------------

    def events(
        self,
        from_seq: Optional[int] = None,
        kinds: Optional[list[str]] = None,
        postal: Optional[str] = None,
        date: Optional[str] = None,
    ) -> Iterator[dict]:
        """Yield marketplace events as dicts; blocks on the live stream.

        Heartbeat comments are skipped. The caller is expected to break out
        (or close the generator) when done.
        """
        params = {}
        if from_seq is not None:
            params["from_seq"] = str(from_seq)
        if kinds:
            params["kinds"] = ",".join(kinds)
        if postal is not None:
            params["postal"] = postal
        if date is not None:
            params["date"] = date
        try:
            resp = self._session.get(
                self.url + "/events", params=params, stream=True, timeout=(self.timeout, None)
            )
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise TransportError(f"cannot open event stream: {exc}") from exc

        data_lines: list[str] = []
        try:
            for line in resp.iter_lines(decode_unicode=True):
                if line is None:
                    continue
                if line == "":
                    if data_lines:
                        yield json.loads("\n".join(data_lines))
                        data_lines = []
                    continue
                if line.startswith(":"):
                    continue  # heartbeat
                if line.startswith("data:"):
                    data_lines.append(line[5:].lstrip())
        finally:
            resp.close()
