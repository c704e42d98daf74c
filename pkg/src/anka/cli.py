"""`anka` command line: node launcher, wallet, market client, bench, scenarios.

Exit codes: 0 success, 1 contract revert / rejected transaction / failed
scenario, 2 node unreachable, 3 usage error. Environment: ANKA_LISTEN and
ANKA_GENESIS default the node flags, ANKA_NODE_URL defaults --node. A YAML
config file (--config, default ~/.config/anka/config.yaml) can pin node_url,
keystore, postal_code, date and format.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date
from decimal import Decimal
from pathlib import Path
from typing import Optional

import yaml

import anka
from anka import codec
from anka.chain import SUGGESTED_GAS_LIMITS, Chain, GenesisConfig, load_genesis
from anka.client import DEFAULT_NODE_URL, NodeClient
from anka.errors import (
    AnkaError,
    PostalCodeError,
    RpcError,
    ScenarioError,
    TransportError,
    TxRejected,
)
from anka.geo import GeoPoint, haversine
from anka.keys import generate_keypair, is_address, load_keystore, save_keystore

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_TRANSPORT = 2
EXIT_USAGE = 3

DEFAULT_CONFIG_PATH = "~/.config/anka/config.yaml"
DEFAULT_LISTEN = "127.0.0.1:8545"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class CliError(AnkaError):
    def __init__(self, message: str, exit_code: int = EXIT_USAGE):
        self.exit_code = exit_code
        super().__init__(message)


def load_cli_config(path: Optional[str]) -> dict:
    candidate = Path(path).expanduser() if path else Path(DEFAULT_CONFIG_PATH).expanduser()
    if not candidate.exists():
        if path:
            raise CliError(f"config file not found: {candidate}")
        return {}
    loaded = yaml.safe_load(candidate.read_text()) or {}
    if not isinstance(loaded, dict):
        raise CliError(f"config file must be a mapping: {candidate}")
    return loaded


def _node_url(args) -> str:
    return (
        args.node
        or os.environ.get("ANKA_NODE_URL")
        or args.config_data.get("node_url")
        or DEFAULT_NODE_URL
    )


def _client(args) -> NodeClient:
    return NodeClient(_node_url(args))


def _keystore(args):
    path = args.keystore or args.config_data.get("keystore")
    if not path:
        raise CliError("no keystore: pass --keystore or set it in the config file")
    if not Path(path).expanduser().exists():
        raise CliError(f"keystore not found: {path}")
    return load_keystore(Path(path).expanduser())


def _json_mode(args) -> bool:
    return bool(args.json or args.config_data.get("format") == "json")


def _emit(args, text: str, payload) -> None:
    if _json_mode(args):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _resolve_date(args, client: Optional[NodeClient]) -> date:
    raw = getattr(args, "date", None) or args.config_data.get("date")
    if raw:
        return date.fromisoformat(str(raw))
    if client is None:
        raise CliError("no --date given and no node to ask for the chain date")
    return date.fromisoformat(client.chain_info()["chain_date"])


def _resolve_postal(args) -> str:
    postal = getattr(args, "postal", None) or args.config_data.get("postal_code")
    if not postal:
        raise CliError("no postal code: pass --postal or set postal_code in the config")
    return str(postal)


# -- transaction plumbing --------------------------------------------------------


def _submit(args, payload) -> int:
    """Sign and submit one payload; honors --nonce, --gas-limit and --dry-run."""
    keypair = _keystore(args)
    gas_limit = args.gas_limit or SUGGESTED_GAS_LIMITS[payload.kind_name]

    if args.nonce is not None:
        nonce = args.nonce
    elif args.dry_run:
        nonce = 0
    else:
        nonce = _client(args).get_account(keypair.address)["nonce"]

    tx = codec.make_signed_tx(keypair, nonce, payload, gas_limit, args.gas_price)
    wire_hex = "0x" + codec.encode_tx(tx).hex()

    if args.dry_run:
        _emit(
            args,
            f"dry run\ntx_hash: {tx.tx_hash}\nwire: {wire_hex}",
            {"tx_hash": tx.tx_hash, "wire": wire_hex, "nonce": nonce},
        )
        return EXIT_OK

    receipt = _client(args).send_transaction(tx)
    return _print_receipt(args, receipt)


def _print_receipt(args, receipt: dict) -> int:
    lines = [
        f"status: {receipt['status']}"
        + (f" ({receipt['reason']})" if receipt.get("reason") else ""),
        f"tx_hash: {receipt['tx_hash']}",
        f"block: {receipt['block_height']}  gas_used: {receipt['gas_used']}",
    ]
    for event in receipt.get("events", []):
        attrs = {k: v for k, v in event.items() if k not in ("kind", "seq", "height")}
        lines.append(f"event {event['kind']}: {json.dumps(attrs, sort_keys=True)}")
    _emit(args, "\n".join(lines), receipt)
    if receipt["status"] != "success":
        print(f"error: {receipt.get('reason')}", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


# -- node -----------------------------------------------------------------------


def cmd_node(args) -> int:
    from anka.node import Node, NodeConfig

    listen = args.listen or os.environ.get("ANKA_LISTEN") or DEFAULT_LISTEN

    if args.dev:
        faucet = generate_keypair()
        genesis = GenesisConfig(
            chain_date=date.today(), accounts={faucet.address: 10**18}
        )
        keystore_path = Path(args.dev_keystore).expanduser()
        save_keystore(keystore_path, faucet)
        chain = Chain.from_genesis(genesis)
        deploy = codec.make_signed_tx(
            faucet, 0, codec.Deploy(), SUGGESTED_GAS_LIMITS["deploy"]
        )
        chain.submit(deploy)
        print(f"dev chain: contract deployed, faucet {faucet.address}", flush=True)
        print(f"faucet keystore: {keystore_path}", flush=True)
    else:
        genesis_path = args.genesis or os.environ.get("ANKA_GENESIS")
        if not genesis_path:
            raise CliError("need --genesis (or ANKA_GENESIS), or --dev")
        if not Path(genesis_path).exists():
            raise CliError(f"genesis file not found: {genesis_path}")
        chain = Chain.from_genesis(load_genesis(genesis_path))

    config = NodeConfig.from_listen(
        listen, tx_log_path=args.tx_log, verbose=args.verbose
    )
    node = Node(chain, config)
    print(
        f"listening on http://{config.host}:{node.port} (rpc: /rpc, events: /events)",
        flush=True,
    )
    print(
        f"chain_date: {chain.config.chain_date}  state_hash: {chain.state_hash()}",
        flush=True,
    )
    try:
        node.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        node.stop()
        node.flush_log_tail()
    return EXIT_OK


# -- wallet -----------------------------------------------------------------------


def cmd_wallet_new(args) -> int:
    path = Path(args.keystore or "anka.keystore.json").expanduser()
    if path.exists() and not args.force:
        raise CliError(f"refusing to overwrite {path} (use --force)")
    seed: Optional[bytes] = None
    if args.seed is not None:
        seed = args.seed.encode()
    keypair = generate_keypair(seed=seed)
    save_keystore(path, keypair)
    _emit(
        args,
        f"address: {keypair.address}\nkeystore: {path}",
        {"address": keypair.address, "keystore": str(path)},
    )
    return EXIT_OK


def cmd_wallet_show(args) -> int:
    if args.address:
        if not is_address(args.address):
            raise CliError(f"not an address: {args.address}")
        address = args.address
    else:
        address = _keystore(args).address
    account = _client(args).get_account(address)
    _emit(
        args,
        f"address: {account['address']}\nbalance: {account['balance']}\n"
        f"nonce: {account['nonce']}",
        account,
    )
    return EXIT_OK


def cmd_wallet_transfer(args) -> int:
    if not is_address(args.to):
        raise CliError(f"not an address: {args.to}")
    if args.amount <= 0:
        raise CliError("amount must be positive")
    return _submit(args, codec.Transfer(to=args.to, amount=args.amount))


# -- market -----------------------------------------------------------------------


def cmd_market_deploy(args) -> int:
    return _submit(args, codec.Deploy())


def cmd_market_register(args) -> int:
    return _submit(args, codec.Register(name=args.name))


def cmd_market_list(args) -> int:
    offer_date = _resolve_date(args, _client(args))
    payload = codec.ListOffer(
        energy_wh=args.wh,
        voltage=args.voltage,
        price=args.price,
        postal_code=_resolve_postal(args),
        lat_micro=int(round(args.lat * 1_000_000)),
        lon_micro=int(round(args.lon * 1_000_000)),
        offer_date=offer_date,
    )
    return _submit(args, payload)


def cmd_market_buy(args) -> int:
    return _submit(args, codec.BuyOffer(offer_id=args.id))


def cmd_market_cancel(args) -> int:
    return _submit(args, codec.CancelOffer(offer_id=args.id))


def cmd_market_show(args) -> int:
    offer = _client(args).get_offer(args.id)
    text = "\n".join(f"{k}: {v}" for k, v in offer.items())
    _emit(args, text, offer)
    return EXIT_OK


def _parse_near(raw: str) -> GeoPoint:
    try:
        lat_s, lon_s = raw.split(",")
        return GeoPoint.from_degrees(float(lat_s), float(lon_s))
    except ValueError as exc:
        raise CliError(f"--near wants LAT,LON in degrees: {raw!r}") from exc


def cmd_market_browse(args) -> int:
    client = _client(args)
    offer_date = _resolve_date(args, client)
    result = client.get_offers(offer_date.isoformat(), _resolve_postal(args), args.voltage)
    offers = result["offers"]

    near = _parse_near(args.near) if args.near else None
    rows = []
    for rec in offers:
        entry = dict(rec)
        if near is not None:
            location = GeoPoint(rec["lat_micro"], rec["lon_micro"])
            entry["distance_km"] = round(haversine(location, near) / 1000.0, 3)
        rows.append(entry)
    if near is not None and args.diameter_km is not None:
        limit_km = args.diameter_km
        rows = [r for r in rows if r["distance_km"] < limit_km]

    header = ["id", "seller", "wh", "voltage", "price", "postal", "date"]
    if near is not None:
        header.append("distance_km")
    grid = [header]
    for r in rows:
        cells = [
            str(r["offer_id"]),
            r["seller"][:10] + "..",
            str(r["energy_wh"]),
            str(r["voltage"]),
            str(r["price"]),
            r["postal_code"],
            r["offer_date"],
        ]
        if near is not None:
            cells.append(str(r["distance_km"]))
        grid.append(cells)
    widths = [max(len(row[i]) for row in grid) for i in range(len(header))]
    table = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in grid]
    table.append(f"({len(rows)} offers, query gas {result['gas_used']})")
    _emit(args, "\n".join(table), {"offers": rows, "gas_used": result["gas_used"]})
    return EXIT_OK


# -- bench -------------------------------------------------------------------------


def cmd_bench(args) -> int:
    from anka import bench

    params = bench.CostParameters()
    reports = [bench.measure_operation_costs(params)]

    offer_counts = [int(x) for x in args.offers.split(",") if x.strip()]
    if offer_counts:
        reports.append(
            bench.compare_query_strategies(
                offer_counts,
                postal_codes_per_bucket=args.postal_codes,
                seed=args.seed,
                params=params,
            )
        )
    reports.append(
        bench.annualize(args.listings, args.sales, Decimal(args.avg_price), params)
    )

    if _json_mode(args):
        out = [
            {
                "title": rep.title,
                "rows": [
                    {
                        "operation": r.operation,
                        "gas_used": r.gas_used,
                        "fee_gwei": r.fee_gwei,
                        "fee_usd": str(r.fee_usd),
                    }
                    for r in rep.rows
                ],
            }
            for rep in reports
        ]
        print(json.dumps(out, indent=2))
    else:
        print("\n\n".join(rep.table() for rep in reports))

    if args.csv:
        for i, rep in enumerate(reports):
            rep.write_csv(args.csv, append=i > 0)
        print(f"\ncsv written: {args.csv}")

    if args.geo_kernels:
        results = bench.bench_geo_kernels(args.geo_kernels, seed=args.seed)
        print(f"\nbatch haversine, n={args.geo_kernels}:")
        for row in results:
            rate = row["n"] / row["seconds"] / 1e6 if row["seconds"] else float("inf")
            print(
                f"  {row['backend']:<6} {row['seconds'] * 1000:9.3f} ms  "
                f"{rate:8.2f} Mpts/s  checksum {row['checksum_m']:.3e}"
            )
    return EXIT_OK


# -- scenario ------------------------------------------------------------------------


def _resolve_scenario(name: str) -> Path:
    """A literal path, or the name of a scenario bundled with the package."""
    path = Path(name)
    if path.exists():
        return path
    bundled = Path(anka.__file__).parent / "scenarios" / name
    for candidate in (bundled, bundled.with_suffix(".jsonl")):
        if candidate.exists():
            return candidate
    raise CliError(f"scenario file not found: {name}")


def cmd_scenario_run(args) -> int:
    from anka.scenario import run_scenario

    path = _resolve_scenario(args.file)
    result = run_scenario(path, node_url=args.node, faucet_keystore=args.faucet)
    _emit(
        args,
        result.summary(),
        {
            "steps": result.steps_executed,
            "state_hash": result.state_hash,
            "balances": result.balances,
        },
    )
    return EXIT_OK


def cmd_scenario_replay(args) -> int:
    genesis_path = args.genesis or os.environ.get("ANKA_GENESIS")
    if not genesis_path:
        raise CliError("need --genesis (or ANKA_GENESIS)")
    if not Path(genesis_path).exists():
        raise CliError(f"genesis file not found: {genesis_path}")
    if not Path(args.file).exists():
        raise CliError(f"log file not found: {args.file}")

    wires = Chain.read_log(args.file)
    chain = Chain.replay(load_genesis(genesis_path), wires)
    state_hash = chain.state_hash()
    _emit(
        args,
        f"replayed {len(wires)} txs\nheight: {chain.height}\nstate_hash: {state_hash}",
        {"txs": len(wires), "height": chain.height, "state_hash": state_hash},
    )
    if args.expect_hash and state_hash != args.expect_hash:
        print(f"error: state hash mismatch, expected {args.expect_hash}", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def _add_common(p: _Parser, signing: bool = False) -> None:
    p.add_argument("--node", help="node URL (default: ANKA_NODE_URL or config)")
    p.add_argument("--config", dest="config_path", help="CLI config file")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    if signing:
        p.add_argument("--keystore", help="keystore JSON with the signing key")
        p.add_argument("--gas-limit", type=int, default=None)
        p.add_argument("--gas-price", type=int, default=1)
        p.add_argument("--nonce", type=int, default=None, help="override the queried nonce")
        p.add_argument(
            "--dry-run",
            action="store_true",
            help="print the signed transaction without submitting",
        )


def build_parser() -> _Parser:
    parser = _Parser(prog="anka", description="peer-to-peer energy market tools")
    parser.add_argument("--version", action="version", version=f"anka {anka.__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    node = sub.add_parser("node", help="run a node")
    node.add_argument("--listen", help="HOST:PORT (default: ANKA_LISTEN or 127.0.0.1:8545)")
    node.add_argument("--genesis", help="genesis YAML (default: ANKA_GENESIS)")
    node.add_argument("--dev", action="store_true", help="fresh dev chain with a faucet")
    node.add_argument("--dev-keystore", default="faucet.keystore.json")
    node.add_argument("--tx-log", help="append every submission to this JSON-lines file")
    node.add_argument("--verbose", action="store_true")
    node.add_argument("--config", dest="config_path")
    node.add_argument("--json", action="store_true")
    node.set_defaults(func=cmd_node)

    wallet = sub.add_parser("wallet", help="keys and balances")
    wsub = wallet.add_subparsers(dest="wallet_command", required=True, parser_class=_Parser)

    wnew = wsub.add_parser("new", help="generate a keystore")
    wnew.add_argument("--keystore", help="output path (default anka.keystore.json)")
    wnew.add_argument("--seed", help="deterministic seed (testing only)")
    wnew.add_argument("--force", action="store_true")
    _add_common(wnew)
    wnew.set_defaults(func=cmd_wallet_new)

    wshow = wsub.add_parser("show", help="address, balance and nonce")
    wshow.add_argument("--address", help="inspect an address instead of a keystore")
    wshow.add_argument("--keystore")
    _add_common(wshow)
    wshow.set_defaults(func=cmd_wallet_show)

    for verb, help_text in (
        ("fund", "send tokens from a faucet keystore"),
        ("transfer", "send tokens"),
    ):
        wt = wsub.add_parser(verb, help=help_text)
        wt.add_argument("--to", required=True, help="recipient address")
        wt.add_argument("--amount", required=True, type=int)
        _add_common(wt, signing=True)
        wt.set_defaults(func=cmd_wallet_transfer)

    market = sub.add_parser("market", help="trade energy")
    msub = market.add_subparsers(dest="market_command", required=True, parser_class=_Parser)

    mdeploy = msub.add_parser("deploy", help="deploy the marketplace contract")
    _add_common(mdeploy, signing=True)
    mdeploy.set_defaults(func=cmd_market_deploy)

    mreg = msub.add_parser("register", help="register this wallet as a trader")
    mreg.add_argument("--name", required=True)
    _add_common(mreg, signing=True)
    mreg.set_defaults(func=cmd_market_register)

    mlist = msub.add_parser("list", help="list an energy offer for sale")
    mlist.add_argument("--wh", required=True, type=int, help="energy amount in Wh")
    mlist.add_argument("--voltage", required=True, type=int)
    mlist.add_argument("--price", required=True, type=int, help="asking price in base units")
    mlist.add_argument("--postal", help="postal code (or config postal_code)")
    mlist.add_argument("--lat", required=True, type=float)
    mlist.add_argument("--lon", required=True, type=float)
    mlist.add_argument("--date", help="delivery date YYYY-MM-DD (default: chain date)")
    _add_common(mlist, signing=True)
    mlist.set_defaults(func=cmd_market_list)

    mbrowse = msub.add_parser("browse", help="browse offers in a postal area")
    mbrowse.add_argument("--postal")
    mbrowse.add_argument("--date")
    mbrowse.add_argument("--voltage", type=int)
    mbrowse.add_argument("--near", help="LAT,LON for a distance column")
    mbrowse.add_argument(
        "--diameter-km", type=float, help="with --near: keep offers closer than this"
    )
    _add_common(mbrowse)
    mbrowse.set_defaults(func=cmd_market_browse)

    mbuy = msub.add_parser("buy", help="buy an offer")
    mbuy.add_argument("--id", required=True, type=int)
    _add_common(mbuy, signing=True)
    mbuy.set_defaults(func=cmd_market_buy)

    mcancel = msub.add_parser("cancel", help="cancel your offer")
    mcancel.add_argument("--id", required=True, type=int)
    _add_common(mcancel, signing=True)
    mcancel.set_defaults(func=cmd_market_cancel)

    mshow = msub.add_parser("show", help="show one offer")
    mshow.add_argument("--id", required=True, type=int)
    _add_common(mshow)
    mshow.set_defaults(func=cmd_market_show)

    bench = sub.add_parser("bench", help="cost benchmarks")
    bench.add_argument("--offers", default="10,100,1000", help="comma-separated market sizes")
    bench.add_argument("--postal-codes", type=int, default=10, help="bucket size target")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--csv", help="also write rows to this CSV")
    bench.add_argument("--geo-kernels", type=int, default=0, help="time haversine backends")
    bench.add_argument("--listings", type=int, default=100, help="listings/year to annualize")
    bench.add_argument("--sales", type=int, default=50, help="sales/year to annualize")
    bench.add_argument("--avg-price", default="3.00", help="average sale price in USD")
    _add_common(bench)
    bench.set_defaults(func=cmd_bench)

    scenario = sub.add_parser("scenario", help="scripted market runs")
    ssub = scenario.add_subparsers(dest="scenario_command", required=True, parser_class=_Parser)
    srun = ssub.add_parser("run", help="execute a JSON-lines scenario")
    srun.add_argument("file", help="path or the name of a bundled scenario")
    srun.add_argument("--faucet", help="faucet keystore (node mode)")
    _add_common(srun)
    srun.set_defaults(func=cmd_scenario_run)

    sreplay = ssub.add_parser("replay", help="re-execute a node tx log on a fresh chain")
    sreplay.add_argument("file", help="JSON-lines transaction log")
    sreplay.add_argument("--genesis", help="genesis YAML (default: ANKA_GENESIS)")
    sreplay.add_argument("--expect-hash", help="fail unless the final state hash matches")
    _add_common(sreplay)
    sreplay.set_defaults(func=cmd_scenario_replay)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.config_data = load_cli_config(getattr(args, "config_path", None))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except TxRejected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except ScenarioError as exc:
        print(f"scenario failed at {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except RpcError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        if exc.code in (-32000, -32001):
            return EXIT_CONTRACT
        return EXIT_USAGE
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except PostalCodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_OK
