// Minimal JSON-RPC 2.0 client for the node's /rpc endpoint.

export interface OfferRecord {
  offer_id: number;
  seller: string;
  energy_wh: number;
  voltage: number;
  price: number;
  postal_code: string;
  lat_micro: number;
  lon_micro: number;
  offer_date: string;
  status: "active" | "sold" | "cancelled";
  buyer: string | null;
}

export interface EventRecord {
  kind: string;
  seq: number;
  height: number;
  [attr: string]: unknown;
}

export interface Receipt {
  tx_hash: string;
  status: "success" | "reverted";
  reason: string | null;
  gas_used: number;
  block_height: number;
  events: EventRecord[];
}

export interface Account {
  address: string;
  balance: number;
  nonce: number;
}

export interface ChainInfo {
  height: number;
  state_hash: string;
  chain_date: string;
  date_window_days: number;
  voltage_whitelist: number[];
  gas_price: number;
  usd_per_gwei: string;
  fee_sink: number;
  total_supply: number;
  last_seq: number;
}

export interface FeeRow {
  operation: string;
  gas_used: number;
  fee_gwei: number;
  fee_usd: string;
  fee_usd_cents: string;
}

export interface FeeTable {
  gas_price: number;
  usd_per_gwei: string;
  rows: FeeRow[];
}

/** A JSON-RPC error response. `code` -32000 carries data.reason for rejects. */
export class RpcError extends Error {
  constructor(
    public code: number,
    message: string,
    public data?: { reason?: string; detail?: string },
  ) {
    super(message);
    this.name = "RpcError";
  }
}

let nextId = 1;

export class RpcClient {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  async call<T>(method: string, params: Record<string, unknown> = {}): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.baseUrl + "/rpc", {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ jsonrpc: "2.0", id: nextId++, method, params }),
      });
    } catch (exc) {
      throw new RpcError(0, `node unreachable: ${exc}`);
    }
    const body = await res.json();
    if (body.error) {
      throw new RpcError(body.error.code, body.error.message, body.error.data);
    }
    return body.result as T;
  }

  sendTransaction(wireHex: string): Promise<Receipt> {
    return this.call<Receipt>("send_transaction", { wire: wireHex });
  }

  getOffers(date: string, postalCode: string, voltage?: number): Promise<{ offers: OfferRecord[]; gas_used: number }> {
    const params: Record<string, unknown> = { date, postal_code: postalCode };
    if (voltage !== undefined) params.voltage = voltage;
    return this.call("get_offers", params);
  }

  getOffersByDiameter(
    latMicro: number,
    lonMicro: number,
    diameterM: number,
    date: string,
  ): Promise<{ offers: OfferRecord[]; gas_used: number }> {
    return this.call("get_offers_by_diameter", {
      lat_micro: latMicro,
      lon_micro: lonMicro,
      diameter_m: diameterM,
      date,
    });
  }

  getOffer(offerId: number): Promise<OfferRecord> {
    return this.call("get_offer", { offer_id: offerId });
  }

  getAccount(address: string): Promise<Account> {
    return this.call("get_account", { address });
  }

  getProfile(address: string): Promise<{ address: string; name: string }> {
    return this.call("get_profile", { address });
  }

  chainInfo(): Promise<ChainInfo> {
    return this.call("chain_info");
  }

  feeTable(): Promise<FeeTable> {
    return this.call("fee_table");
  }
}
