// Client for the node's /events SSE stream.
//
// A hand-rolled parser instead of EventSource: the node names every frame
// after its event kind, and reconnect must resume from the last sequence
// number seen (`from_seq = lastSeq + 1`) so no event is missed or replayed.

export interface SseFrame {
  id: number | null;
  event: string;
  data: string;
}

export interface ChainEvent {
  kind: string;
  seq: number;
  height: number;
  [attr: string]: unknown;
}

/** Incremental SSE parser; feed it text chunks, it yields complete frames. */
export class SseParser {
  private buffer = "";

  push(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    for (;;) {
      const at = this.buffer.indexOf("\n\n");
      if (at < 0) break;
      const block = this.buffer.slice(0, at);
      this.buffer = this.buffer.slice(at + 2);
      const frame = parseBlock(block);
      if (frame) frames.push(frame);
    }
    return frames;
  }
}

function parseBlock(block: string): SseFrame | null {
  let id: number | null = null;
  let event = "message";
  const data: string[] = [];
  for (const line of block.split("\n")) {
    if (line.startsWith(":")) continue; // comment / keep-alive
    const colon = line.indexOf(":");
    if (colon < 0) continue;
    const field = line.slice(0, colon);
    let value = line.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "id") id = Number(value);
    else if (field === "event") event = value;
    else if (field === "data") data.push(value);
  }
  if (data.length === 0) return null;
  return { id, event, data: data.join("\n") };
}

export interface StreamOptions {
  fromSeq?: number;
  kinds?: string[];
  postal?: string;
  date?: string;
  onEvent: (event: ChainEvent) => void;
  onStatus?: (status: "connected" | "reconnecting") => void;
}

const RETRY_MS = 1_000;

/**
 * Long-lived subscription. Reads /events over fetch, parses frames and
 * invokes onEvent for each. On connection loss it reconnects from the next
 * unseen sequence number, so subscribers never poll and never drop events.
 */
export class EventStream {
  private stopped = false;
  private lastSeq: number;
  private abort: AbortController | null = null;

  constructor(
    private baseUrl: string,
    private options: StreamOptions,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.lastSeq = (options.fromSeq ?? 0) - 1;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.abort?.abort();
  }

  private url(): string {
    const params = new URLSearchParams({ from_seq: String(this.lastSeq + 1) });
    if (this.options.kinds?.length) params.set("kinds", this.options.kinds.join(","));
    if (this.options.postal) params.set("postal", this.options.postal);
    if (this.options.date) params.set("date", this.options.date);
    return `${this.baseUrl}/events?${params}`;
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.abort = new AbortController();
      try {
        const res = await fetch(this.url(), { signal: this.abort.signal });
        if (!res.ok || !res.body) throw new Error(`events endpoint returned ${res.status}`);
        this.options.onStatus?.("connected");
        const reader = res.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
            const event = JSON.parse(frame.data) as ChainEvent;
            if (event.seq > this.lastSeq) this.lastSeq = event.seq;
            this.options.onEvent(event);
          }
        }
      } catch {
        // fall through to reconnect
      }
      if (this.stopped) return;
      this.options.onStatus?.("reconnecting");
      await new Promise((r) => setTimeout(r, RETRY_MS));
    }
  }
}
