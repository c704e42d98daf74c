// Offer store: a client-side reduction of the node's event stream.
//
// The table is never computed locally from scratch; it is the fold of
// OfferListed / OfferSold / OfferCancelled events the node emits, replayed
// from sequence 0 on connect and kept live by the same subscription. Sold
// and cancelled offers drop out of every view the moment the event lands,
// with no polling.

import { ChainEvent } from "./events";
import { haversineMeters, GeoPointMicro } from "./geo";
import { OfferRecord, RpcClient, RpcError } from "./rpc";

export interface OfferView extends OfferRecord {
  sellerName: string;
  distanceM: number | null;
}

export type SortColumn =
  | "offer_id"
  | "seller"
  | "energy_wh"
  | "voltage"
  | "price"
  | "offer_date"
  | "distance";

export interface ViewOptions {
  voltage?: number;
  buyer?: GeoPointMicro;
  sortBy: SortColumn;
  descending: boolean;
}

export class OfferStore {
  private offers = new Map<number, OfferRecord>();
  private names = new Map<string, string>();
  private listeners = new Set<() => void>();

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  get(offerId: number): OfferRecord | undefined {
    return this.offers.get(offerId);
  }

  get size(): number {
    return this.offers.size;
  }

  applyEvent(event: ChainEvent): void {
    switch (event.kind) {
      case "OfferListed": {
        const id = event.offer_id as number;
        this.offers.set(id, {
          offer_id: id,
          seller: event.seller as string,
          energy_wh: event.energy_wh as number,
          voltage: event.voltage as number,
          price: event.price as number,
          postal_code: event.postal_code as string,
          lat_micro: event.lat_micro as number,
          lon_micro: event.lon_micro as number,
          offer_date: event.offer_date as string,
          status: "active",
          buyer: null,
        });
        break;
      }
      case "OfferSold":
      case "OfferCancelled":
        this.offers.delete(event.offer_id as number);
        break;
      case "Registered":
        this.names.set((event.address as string).toLowerCase(), event.name as string);
        break;
      default:
        return;
    }
    this.notify();
  }

  /** Display name for an address, resolving via get_profile on a miss. */
  sellerName(address: string): string {
    return this.names.get(address.toLowerCase()) ?? shortAddress(address);
  }

  async resolveName(rpc: RpcClient, address: string): Promise<string> {
    const key = address.toLowerCase();
    const cached = this.names.get(key);
    if (cached !== undefined) return cached;
    try {
      const profile = await rpc.getProfile(address);
      this.names.set(key, profile.name);
      return profile.name;
    } catch (exc) {
      if (exc instanceof RpcError) return shortAddress(address);
      throw exc;
    }
  }

  view(options: ViewOptions): OfferView[] {
    const rows: OfferView[] = [];
    for (const offer of this.offers.values()) {
      if (offer.status !== "active") continue;
      if (options.voltage !== undefined && offer.voltage !== options.voltage) continue;
      rows.push({
        ...offer,
        sellerName: this.sellerName(offer.seller),
        distanceM: options.buyer ? haversineMeters(options.buyer, offer) : null,
      });
    }
    rows.sort(comparator(options.sortBy));
    if (options.descending) rows.reverse();
    return rows;
  }
}

function comparator(column: SortColumn): (a: OfferView, b: OfferView) => number {
  return (a, b) => {
    let cmp: number;
    switch (column) {
      case "seller":
        cmp = a.sellerName.localeCompare(b.sellerName);
        break;
      case "offer_date":
        cmp = a.offer_date.localeCompare(b.offer_date);
        break;
      case "distance":
        cmp = (a.distanceM ?? Infinity) - (b.distanceM ?? Infinity);
        break;
      default:
        cmp = a[column] - b[column];
    }
    return cmp !== 0 ? cmp : a.offer_id - b.offer_id;
  };
}

export function shortAddress(address: string): string {
  return address.length > 12 ? `${address.slice(0, 8)}…${address.slice(-4)}` : address;
}
