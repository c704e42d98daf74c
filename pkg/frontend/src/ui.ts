// DOM wiring for the single-page market client.
//
// All panels read from one OfferStore fed by the node's event stream, so a
// sale seen anywhere removes the offer from every open table without a
// refresh. The node is the only source of record: balances come from
// get_account, fee quotes from fee_table, outcomes from receipts.

import { Payload } from "./codec";
import { ChainEvent, StreamOptions } from "./events";
import { formatFee } from "./fees";
import { formatDistance, GeoPointMicro, normalizePostal, parseMicroDegrees } from "./geo";
import { importKeystore } from "./keys";
import { ChainInfo, FeeTable, Receipt, RpcClient, RpcError } from "./rpc";
import { WalletSession } from "./session";
import { OfferStore, SortColumn } from "./store";

export interface AppDeps {
  rpc: RpcClient;
  streamFactory: (options: StreamOptions) => { stop(): void };
}

export interface App {
  store: OfferStore;
  session: WalletSession | null;
  info: ChainInfo | null;
  feeTable: FeeTable | null;
  start(): Promise<void>;
  refreshWallet(): Promise<void>;
  stop(): void;
}

const EVENT_LOG_LIMIT = 50;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

export function setupApp(deps: AppDeps): App {
  const store = new OfferStore();
  let stream: { stop(): void } | null = null;

  const app: App = {
    store,
    session: null,
    info: null,
    feeTable: null,
    start,
    refreshWallet,
    stop: () => stream?.stop(),
  };

  let sortBy: SortColumn = "offer_id";
  let descending = false;
  const soldUnderCursor = new Set<number>(); // offers whose buy came back OfferNotActive

  // -- wallet ---------------------------------------------------------------

  async function openWallet(text: string): Promise<void> {
    setText("wallet-error", "");
    try {
      const pair = await importKeystore(text);
      app.session = new WalletSession(pair, deps.rpc);
    } catch (exc) {
      setText("wallet-error", String((exc as Error).message ?? exc));
      return;
    }
    el("wallet-locked").hidden = true;
    el("wallet-open").hidden = false;
    setText("wallet-address", app.session.address);
    await refreshWallet();
  }

  async function refreshWallet(): Promise<void> {
    if (!app.session) return;
    const account = await app.session.account();
    setText("wallet-balance", `${account.balance.toLocaleString("en-US")} gwei`);
    setText("wallet-nonce", String(account.nonce));
  }

  el("import-btn").addEventListener("click", async () => {
    const file = (el<HTMLInputElement>("keystore-file").files ?? [])[0];
    const pasted = el<HTMLTextAreaElement>("keystore-text").value.trim();
    if (file) {
      await openWallet(await file.text());
    } else if (pasted) {
      await openWallet(pasted);
    } else {
      setText("wallet-error", "paste a keystore or choose a file first");
    }
  });

  // -- submissions ------------------------------------------------------------

  function requireSession(errorId: string): WalletSession | null {
    if (!app.session) {
      setText(errorId, "import a keystore first");
      return null;
    }
    return app.session;
  }

  function receiptLine(receipt: Receipt): string {
    const cfg = app.info;
    const fee = cfg ? formatFee(receipt.gas_used, cfg.gas_price, cfg.usd_per_gwei) : `${receipt.gas_used} gas`;
    if (receipt.status === "success") {
      return `confirmed in block ${receipt.block_height}, fee ${fee}`;
    }
    return `reverted: ${receipt.reason}, fee ${fee}`;
  }

  async function submit(payload: Payload, errorId: string, receiptId: string): Promise<Receipt | null> {
    const session = requireSession(errorId);
    if (!session) return null;
    setText(errorId, "");
    setText(receiptId, "submitting…");
    try {
      const receipt = await session.submit(payload);
      setText(receiptId, receiptLine(receipt));
      await refreshWallet();
      return receipt;
    } catch (exc) {
      setText(receiptId, "");
      if (exc instanceof RpcError) {
        const reason = exc.data?.reason ? `${exc.data.reason}: ` : "";
        setText(errorId, `rejected — ${reason}${exc.data?.detail ?? exc.message}`);
      } else {
        setText(errorId, String((exc as Error).message ?? exc));
      }
      await refreshWallet().catch(() => undefined);
      return null;
    }
  }

  // -- register ---------------------------------------------------------------

  el("register-btn").addEventListener("click", async () => {
    const name = el<HTMLInputElement>("register-name").value.trim();
    if (!name) {
      setText("register-error", "display name must not be empty");
      return;
    }
    await submit({ kind: "register", name }, "register-error", "register-receipt");
  });

  // -- list offer ---------------------------------------------------------------

  function parseListForm(): Payload | null {
    const read = (id: string) => el<HTMLInputElement>(id).value.trim();
    try {
      const energy = positiveInt(read("list-energy"), "energy");
      const price = positiveInt(read("list-price"), "price");
      const postal = normalizePostal(read("list-postal"));
      const lat = parseMicroDegrees(read("list-lat"), "lat");
      const lon = parseMicroDegrees(read("list-lon"), "lon");
      const date = read("list-date");
      if (!/^\d{4}-\d{2}-\d{2}$/.test(date)) throw new Error("offer date must be YYYY-MM-DD");
      return {
        kind: "list_offer",
        energy_wh: energy,
        voltage: Number(el<HTMLSelectElement>("list-voltage").value),
        price,
        postal_code: postal,
        lat_micro: lat,
        lon_micro: lon,
        offer_date: date,
      };
    } catch (exc) {
      setText("list-error", String((exc as Error).message ?? exc));
      return null;
    }
  }

  el("list-btn").addEventListener("click", async () => {
    setText("list-error", "");
    const payload = parseListForm();
    if (!payload) return;
    await submit(payload, "list-error", "list-receipt");
  });

  // -- browse and buy ---------------------------------------------------------------

  function buyerLocation(): GeoPointMicro | undefined {
    const lat = el<HTMLInputElement>("buyer-lat").value.trim();
    const lon = el<HTMLInputElement>("buyer-lon").value.trim();
    if (!lat || !lon) return undefined;
    try {
      return { lat_micro: parseMicroDegrees(lat, "lat"), lon_micro: parseMicroDegrees(lon, "lon") };
    } catch {
      return undefined;
    }
  }

  function renderOffers(): void {
    const filterRaw = el<HTMLSelectElement>("filter-voltage").value;
    const rows = store.view({
      voltage: filterRaw ? Number(filterRaw) : undefined,
      buyer: buyerLocation(),
      sortBy,
      descending,
    });
    const tbody = el("offer-rows");
    tbody.textContent = "";
    for (const offer of rows) {
      const tr = document.createElement("tr");
      tr.dataset.offerId = String(offer.offer_id);
      const cells = [
        String(offer.offer_id),
        offer.sellerName,
        String(offer.energy_wh),
        `${offer.voltage}V`,
        offer.price.toLocaleString("en-US"),
        offer.offer_date,
        offer.distanceM === null ? "—" : formatDistance(offer.distanceM),
      ];
      for (const text of cells) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.appendChild(td);
      }
      const action = document.createElement("td");
      if (soldUnderCursor.has(offer.offer_id)) {
        action.textContent = "already sold";
        action.className = "sold-note";
      } else {
        const btn = document.createElement("button");
        btn.textContent = "Buy";
        btn.className = "buy-btn";
        btn.addEventListener("click", () => void buy(offer.offer_id));
        action.appendChild(btn);
      }
      tr.appendChild(action);
      tbody.appendChild(tr);
    }
    setText("browse-note", rows.length ? `${rows.length} active offer(s)` : "no active offers");
  }

  async function buy(offerId: number): Promise<void> {
    const receipt = await submit({ kind: "buy_offer", offer_id: offerId }, "buy-receipt", "buy-receipt");
    if (receipt && receipt.status === "reverted" && receipt.reason === "OfferNotActive") {
      soldUnderCursor.add(offerId);
      setText("buy-receipt", `offer ${offerId} already sold — ${receiptLine(receipt)}`);
      renderOffers();
    }
  }

  for (const th of document.querySelectorAll<HTMLTableCellElement>("#offer-table th[data-sort]")) {
    th.addEventListener("click", () => {
      const column = th.dataset.sort as SortColumn;
      descending = column === sortBy ? !descending : false;
      sortBy = column;
      renderOffers();
    });
  }
  el("filter-voltage").addEventListener("change", renderOffers);
  el("buyer-lat").addEventListener("input", renderOffers);
  el("buyer-lon").addEventListener("input", renderOffers);

  // -- event log ----------------------------------------------------------------

  function logEvent(event: ChainEvent): void {
    const log = el("event-log");
    const li = document.createElement("li");
    const attrs = Object.entries(event)
      .filter(([k]) => !["kind", "seq", "height"].includes(k))
      .map(([k, v]) => `${k}=${v}`)
      .join(" ");
    li.textContent = `#${event.seq} ${event.kind} ${attrs}`;
    log.prepend(li);
    while (log.children.length > EVENT_LOG_LIMIT) log.lastChild?.remove();
  }

  // -- boot ----------------------------------------------------------------

  function fillVoltages(whitelist: number[]): void {
    for (const id of ["list-voltage", "filter-voltage"]) {
      const select = el<HTMLSelectElement>(id);
      for (const v of whitelist) {
        const option = document.createElement("option");
        option.value = String(v);
        option.textContent = `${v}V`;
        select.appendChild(option);
      }
    }
  }

  function showFeeQuotes(table: FeeTable): void {
    const usd = (op: string) => {
      const row = table.rows.find((r) => r.operation === op);
      return row ? `fee $${row.fee_usd_cents}` : "";
    };
    setText("register-fee", usd("register"));
    setText("list-fee", usd("list_offer"));
  }

  async function start(): Promise<void> {
    app.info = await deps.rpc.chainInfo();
    fillVoltages(app.info.voltage_whitelist);
    el<HTMLInputElement>("list-date").value = app.info.chain_date;
    app.feeTable = await deps.rpc.feeTable();
    showFeeQuotes(app.feeTable);
    store.subscribe(renderOffers);
    stream = deps.streamFactory({
      fromSeq: 0,
      onEvent: (event) => {
        store.applyEvent(event);
        logEvent(event);
        if (event.kind === "OfferSold") soldUnderCursor.delete(event.offer_id as number);
      },
      onStatus: (status) => setText("node-status", status === "connected" ? `connected — ${deps.rpc.baseUrl}` : "reconnecting…"),
    });
    renderOffers();
  }

  return app;
}

function positiveInt(text: string, label: string): number {
  const value = Number(text);
  if (!Number.isInteger(value) || value <= 0) throw new Error(`${label} must be a positive integer`);
  return value;
}
